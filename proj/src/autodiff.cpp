#include "sinevid/autodiff.hpp"

#include "sinevid/errors.hpp"
#include "sinevid/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sinevid {

namespace k = kernels;
using k::index_t;

namespace {

template <class T>
void require_matrix(const Tensor<T>& t, const char* op)
{
    if (t.rank() > 2)
        throw DimensionError(std::string(op) + " expects a matrix or vector, got " + shape_string(t.shape()));
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op)
{
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
}

template <class T>
k::GemmArgs<T> gemm_args(index_t m, index_t n, index_t kk, const T* a, index_t a_rs, index_t a_cs, const T* b,
                         index_t ldb, T* c, index_t ldc, bool accumulate)
{
    return k::GemmArgs<T>{m, n, kk, a, a_rs, a_cs, b, ldb, c, ldc, accumulate};
}

} // namespace

template <class T>
Var Tape<T>::push(Op op, Var lhs, Var rhs, T param, Tensor<T> value, bool requires_grad)
{
    if (op != Op::leaf)
        value.require_finite("tape operation");
    Node n;
    n.op = op;
    n.lhs = lhs.index;
    n.rhs = rhs.index;
    n.param = param;
    n.requires_grad = requires_grad;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Tape<T>::leaf(Tensor<T> value, bool requires_grad)
{
    value.require_finite("leaf input");
    return push(Op::leaf, {}, {}, T(0), std::move(value), requires_grad);
}

template <class T>
Var Tape<T>::leaf_ref(const Tensor<T>& value, bool requires_grad)
{
    value.require_finite("leaf input");
    Node n;
    n.requires_grad = requires_grad;
    n.borrowed = &value;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
const Tensor<T>& Tape<T>::value(Var v) const
{
    return value_of(node(v));
}

template <class T>
Var Tape<T>::matmul(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_matrix(A, "matmul");
    require_matrix(B, "matmul");
    if (A.cols() != B.rows())
        throw DimensionError("matmul: inner extents differ, " + shape_string(A.shape()) + " . " +
                             shape_string(B.shape()));
    const auto m = static_cast<index_t>(A.rows());
    const auto n = static_cast<index_t>(B.cols());
    const auto kk = static_cast<index_t>(A.cols());
    Tensor<T> C({A.rows(), B.cols()});
    k::gemm(gemm_args<T>(m, n, kk, A.data(), kk, 1, B.data(), n, C.data(), n, false));
    return push(Op::matmul, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::matmul_bt(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_matrix(A, "matmul");
    require_matrix(B, "matmul");
    if (A.cols() != B.cols())
        throw DimensionError("matmul: inner extents differ, " + shape_string(A.shape()) + " . " +
                             shape_string(B.shape()) + "^T");
    const auto m = static_cast<index_t>(A.rows());
    const auto n = static_cast<index_t>(B.rows());
    const auto kk = static_cast<index_t>(A.cols());
    const Tensor<T> Bt = B.transposed();
    Tensor<T> C({A.rows(), B.rows()});
    k::gemm(gemm_args<T>(m, n, kk, A.data(), kk, 1, Bt.data(), n, C.data(), n, false));
    return push(Op::matmul_bt, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::add(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_same_shape(A, B, "add");
    Tensor<T> C = A;
    k::axpy(static_cast<index_t>(C.size()), T(1), B.data(), C.data());
    return push(Op::add, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::add_rows(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_matrix(A, "add_rows");
    require_matrix(B, "add_rows");
    if (A.cols() != B.cols() || A.rows() % B.rows() != 0)
        throw DimensionError("add_rows: cannot broadcast " + shape_string(B.shape()) + " over " +
                             shape_string(A.shape()));
    Tensor<T> C(A.shape());
    const auto rows = static_cast<index_t>(A.rows());
    k::add_rows(rows, static_cast<index_t>(A.cols()), rows / static_cast<index_t>(B.rows()), A.data(), B.data(),
                C.data());
    return push(Op::add_rows, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::mul(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_same_shape(A, B, "mul");
    Tensor<T> C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i)
        C[i] = A[i] * B[i];
    return push(Op::mul, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::sine(Var x, T omega)
{
    if (!(omega > T(0)))
        throw ContractError("sine: omega must be positive");
    const Tensor<T>& X = value(x);
    Tensor<T> Y(X.shape());
    k::sine_forward(static_cast<index_t>(X.size()), omega, X.data(), Y.data());
    return push(Op::sine, x, {}, omega, std::move(Y), requires_grad(x));
}

template <class T>
Var Tape<T>::relu(Var x)
{
    const Tensor<T>& X = value(x);
    Tensor<T> Y(X.shape());
    for (std::size_t i = 0; i < X.size(); ++i)
        Y[i] = X[i] > T(0) ? X[i] : T(0);
    return push(Op::relu, x, {}, T(0), std::move(Y), requires_grad(x));
}

template <class T>
Var Tape<T>::scale(Var x, T factor)
{
    Tensor<T> Y = value(x);
    for (auto& v : Y.values())
        v *= factor;
    return push(Op::scale, x, {}, factor, std::move(Y), requires_grad(x));
}

template <class T>
Var Tape<T>::sum(Var x)
{
    const Tensor<T>& X = value(x);
    T acc = 0;
    for (T v : X.values())
        acc += v;
    return push(Op::sum, x, {}, T(0), Tensor<T>::scalar(acc), requires_grad(x));
}

template <class T>
Var Tape<T>::mean(Var x)
{
    const Tensor<T>& X = value(x);
    T acc = 0;
    for (T v : X.values())
        acc += v;
    return push(Op::mean, x, {}, T(0), Tensor<T>::scalar(acc / static_cast<T>(X.size())), requires_grad(x));
}

template <class T>
Var Tape<T>::squared_error(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_same_shape(A, B, "squared_error");
    Tensor<T> C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) {
        const T d = A[i] - B[i];
        C[i] = d * d;
    }
    return push(Op::squared_error, a, b, T(0), std::move(C), requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::mse(Var a, Var b)
{
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    if (A.size() != B.size())
        throw DimensionError("mse: length mismatch " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
    const T total = k::squared_distance(static_cast<index_t>(A.size()), A.data(), B.data());
    return push(Op::mse, a, b, T(0), Tensor<T>::scalar(total / static_cast<T>(A.size())),
                requires_grad(a) || requires_grad(b));
}

template <class T>
Var Tape<T>::bce_with_logits(Var logits, Var labels)
{
    const Tensor<T>& Z = value(logits);
    const Tensor<T>& Y = value(labels);
    if (Z.size() != Y.size())
        throw DimensionError("bce_with_logits: length mismatch " + shape_string(Z.shape()) + " vs " +
                             shape_string(Y.shape()));
    T acc = 0;
    for (std::size_t i = 0; i < Z.size(); ++i) {
        const T z = Z[i];
        acc += std::max(z, T(0)) - z * Y[i] + std::log1p(std::exp(-std::abs(z)));
    }
    return push(Op::bce, logits, labels, T(0), Tensor<T>::scalar(acc / static_cast<T>(Z.size())),
                requires_grad(logits));
}

template <class T>
Tensor<T>& Tape<T>::grad_buffer(std::uint32_t index)
{
    Node& n = nodes_[index];
    if (n.grad.size() == 0)
        n.grad = Tensor<T>(value_of(n).shape());
    return n.grad;
}

template <class T>
void Tape<T>::propagate(std::uint32_t index)
{
    Node& n = nodes_[index];
    const Tensor<T>& G = n.grad;
    const bool need_l = n.op != Op::leaf && nodes_[n.lhs].requires_grad;
    const bool binary = n.op == Op::matmul || n.op == Op::matmul_bt || n.op == Op::add || n.op == Op::add_rows ||
                        n.op == Op::mul || n.op == Op::squared_error || n.op == Op::mse || n.op == Op::bce;
    const bool need_r = binary && nodes_[n.rhs].requires_grad;
    const auto size = static_cast<index_t>(G.size());

    switch (n.op) {
    case Op::leaf:
        break;
    case Op::matmul: {
        const Tensor<T>& A = value_of(nodes_[n.lhs]);
        const Tensor<T>& B = value_of(nodes_[n.rhs]);
        const auto m = static_cast<index_t>(A.rows());
        const auto kk = static_cast<index_t>(A.cols());
        const auto nn = static_cast<index_t>(B.cols());
        if (need_l) {
            const Tensor<T> Bt = B.transposed();
            k::gemm(gemm_args<T>(m, kk, nn, G.data(), nn, 1, Bt.data(), kk, grad_buffer(n.lhs).data(), kk, true));
        }
        if (need_r)
            k::gemm(gemm_args<T>(kk, nn, m, A.data(), 1, kk, G.data(), nn, grad_buffer(n.rhs).data(), nn, true));
        break;
    }
    case Op::matmul_bt: {
        const Tensor<T>& A = value_of(nodes_[n.lhs]);
        const Tensor<T>& B = value_of(nodes_[n.rhs]);
        const auto m = static_cast<index_t>(A.rows());
        const auto kk = static_cast<index_t>(A.cols());
        const auto nn = static_cast<index_t>(B.rows());
        if (need_l)
            k::gemm(gemm_args<T>(m, kk, nn, G.data(), nn, 1, B.data(), kk, grad_buffer(n.lhs).data(), kk, true));
        if (need_r)
            k::gemm(gemm_args<T>(nn, kk, m, G.data(), 1, nn, A.data(), kk, grad_buffer(n.rhs).data(), kk, true));
        break;
    }
    case Op::add:
        if (need_l)
            k::axpy(size, T(1), G.data(), grad_buffer(n.lhs).data());
        if (need_r)
            k::axpy(size, T(1), G.data(), grad_buffer(n.rhs).data());
        break;
    case Op::add_rows: {
        if (need_l)
            k::axpy(size, T(1), G.data(), grad_buffer(n.lhs).data());
        if (need_r) {
            const auto rows = static_cast<index_t>(G.rows());
            const auto groups = static_cast<index_t>(value_of(nodes_[n.rhs]).rows());
            k::sum_rows_grouped(rows, static_cast<index_t>(G.cols()), rows / groups, G.data(),
                                grad_buffer(n.rhs).data());
        }
        break;
    }
    case Op::mul: {
        const Tensor<T>& A = value_of(nodes_[n.lhs]);
        const Tensor<T>& B = value_of(nodes_[n.rhs]);
        if (need_l) {
            Tensor<T>& gA = grad_buffer(n.lhs);
            for (std::size_t i = 0; i < G.size(); ++i)
                gA[i] += G[i] * B[i];
        }
        if (need_r) {
            Tensor<T>& gB = grad_buffer(n.rhs);
            for (std::size_t i = 0; i < G.size(); ++i)
                gB[i] += G[i] * A[i];
        }
        break;
    }
    case Op::sine:
        if (need_l)
            k::sine_backward(size, n.param, value_of(nodes_[n.lhs]).data(), G.data(), grad_buffer(n.lhs).data());
        break;
    case Op::relu:
        if (need_l) {
            const Tensor<T>& X = value_of(nodes_[n.lhs]);
            Tensor<T>& gX = grad_buffer(n.lhs);
            for (std::size_t i = 0; i < G.size(); ++i)
                if (X[i] > T(0))
                    gX[i] += G[i];
        }
        break;
    case Op::scale:
        if (need_l)
            k::axpy(size, n.param, G.data(), grad_buffer(n.lhs).data());
        break;
    case Op::sum:
    case Op::mean:
        if (need_l) {
            Tensor<T>& gX = grad_buffer(n.lhs);
            const T g = n.op == Op::sum ? G[0] : G[0] / static_cast<T>(gX.size());
            for (auto& v : gX.values())
                v += g;
        }
        break;
    case Op::squared_error: {
        const Tensor<T>& A = value_of(nodes_[n.lhs]);
        const Tensor<T>& B = value_of(nodes_[n.rhs]);
        for (std::size_t i = 0; i < G.size(); ++i) {
            const T d = T(2) * G[i] * (A[i] - B[i]);
            if (need_l)
                grad_buffer(n.lhs)[i] += d;
            if (need_r)
                grad_buffer(n.rhs)[i] -= d;
        }
        break;
    }
    case Op::mse: {
        const Tensor<T>& A = value_of(nodes_[n.lhs]);
        const Tensor<T>& B = value_of(nodes_[n.rhs]);
        const auto count = static_cast<index_t>(A.size());
        const T factor = T(2) * G[0] / static_cast<T>(count);
        if (need_l)
            k::scaled_difference(count, factor, A.data(), B.data(), grad_buffer(n.lhs).data());
        if (need_r)
            k::scaled_difference(count, -factor, A.data(), B.data(), grad_buffer(n.rhs).data());
        break;
    }
    case Op::bce: {
        const Tensor<T>& Z = value_of(nodes_[n.lhs]);
        const Tensor<T>& Y = value_of(nodes_[n.rhs]);
        const T factor = G[0] / static_cast<T>(Z.size());
        if (need_l) {
            Tensor<T>& gZ = grad_buffer(n.lhs);
            for (std::size_t i = 0; i < Z.size(); ++i) {
                const T sig = T(1) / (T(1) + std::exp(-Z[i]));
                gZ[i] += factor * (sig - Y[i]);
            }
        }
        if (need_r) {
            Tensor<T>& gY = grad_buffer(n.rhs);
            for (std::size_t i = 0; i < Z.size(); ++i)
                gY[i] -= factor * Z[i];
        }
        break;
    }
    }
}

template <class T>
void Tape<T>::backward(Var loss)
{
    if (loss.index >= nodes_.size())
        throw ContractError("backward: unknown node");
    if (value(loss).size() != 1)
        throw ContractError("backward: loss must be a scalar, got shape " + shape_string(value(loss).shape()));
    for (auto& n : nodes_)
        n.grad = Tensor<T>();
    if (!nodes_[loss.index].requires_grad)
        return;
    grad_buffer(loss.index)[0] = T(1);
    for (std::uint32_t i = loss.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.size() == 0 || !n.requires_grad)
            continue;
        propagate(i);
        if (n.op != Op::leaf)
            n.grad = Tensor<T>();
    }
}

template <class T>
Tensor<T> Tape<T>::grad(Var v) const
{
    const Node& n = node(v);
    if (!n.requires_grad || n.grad.size() == 0)
        return Tensor<T>(value_of(n).shape());
    return n.grad;
}

template <class T>
std::vector<Tensor<T>> Tape<T>::backward(Var loss, std::span<const Var> params)
{
    backward(loss);
    std::vector<Tensor<T>> out;
    out.reserve(params.size());
    for (Var p : params)
        out.push_back(grad(p));
    return out;
}

template class Tape<float>;
template class Tape<double>;

} // namespace sinevid
