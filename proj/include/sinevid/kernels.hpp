#pragma once

// Inner loops of the differentiation core. Every kernel has a scalar
// reference implementation; float kernels additionally have an AVX2/FMA
// variant picked once at startup from the CPU feature bits. Double precision
// always runs the scalar path (it only backs gradient verification).
//
// Setting SINEVID_KERNELS=scalar in the environment pins the scalar path.

#include <cstddef>
#include <string_view>

namespace sinevid::kernels {

using index_t = std::ptrdiff_t;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// True when the binary contains the variant and the CPU can run it.
bool isa_available(Isa isa) noexcept;

Isa active_isa() noexcept;

// Overrides the dispatch choice; throws ContractError if unavailable.
void set_active_isa(Isa isa);

// C[i, j] (+)= sum_p A(i, p) * B[p * ldb + j]
// A(i, p) lives at a[i * a_rs + p * a_cs], which lets one kernel serve both
// A and A^T operands. B rows must be contiguous.
template <class T>
struct GemmArgs {
    index_t m, n, k;
    const T* a;
    index_t a_rs, a_cs;
    const T* b;
    index_t ldb;
    T* c;
    index_t ldc;
    bool accumulate;
};

template <class T> void gemm(const GemmArgs<T>& g);

// y = sin(omega * x)
template <class T> void sine_forward(index_t n, T omega, const T* x, T* y);
// gx += gy * omega * cos(omega * x)
template <class T> void sine_backward(index_t n, T omega, const T* x, const T* gy, T* gx);

// out[i, :] = a[i, :] + b[i / group_rows, :]
template <class T>
void add_rows(index_t rows, index_t cols, index_t group_rows, const T* a, const T* b, T* out);
// out[i / group_rows, :] += g[i, :]
template <class T>
void sum_rows_grouped(index_t rows, index_t cols, index_t group_rows, const T* g, T* out);

// y += alpha * x
template <class T> void axpy(index_t n, T alpha, const T* x, T* y);

// sum_i (a_i - b_i)^2
template <class T> T squared_distance(index_t n, const T* a, const T* b);

// out += alpha * (a - b)
template <class T> void scaled_difference(index_t n, T alpha, const T* a, const T* b, T* out);

// Explicit per-ISA entry points, used by the equivalence tests.
namespace scalar {
template <class T> void gemm(const GemmArgs<T>& g);
template <class T> void sine_forward(index_t n, T omega, const T* x, T* y);
template <class T> void sine_backward(index_t n, T omega, const T* x, const T* gy, T* gx);
template <class T>
void add_rows(index_t rows, index_t cols, index_t group_rows, const T* a, const T* b, T* out);
template <class T>
void sum_rows_grouped(index_t rows, index_t cols, index_t group_rows, const T* g, T* out);
template <class T> void axpy(index_t n, T alpha, const T* x, T* y);
template <class T> T squared_distance(index_t n, const T* a, const T* b);
template <class T> void scaled_difference(index_t n, T alpha, const T* a, const T* b, T* out);
} // namespace scalar

#if defined(SINEVID_HAVE_AVX2)
namespace avx2 {
void gemm(const GemmArgs<float>& g);
void sine_forward(index_t n, float omega, const float* x, float* y);
void sine_backward(index_t n, float omega, const float* x, const float* gy, float* gx);
void add_rows(index_t rows, index_t cols, index_t group_rows, const float* a, const float* b, float* out);
void sum_rows_grouped(index_t rows, index_t cols, index_t group_rows, const float* g, float* out);
void axpy(index_t n, float alpha, const float* x, float* y);
float squared_distance(index_t n, const float* a, const float* b);
void scaled_difference(index_t n, float alpha, const float* a, const float* b, float* out);
} // namespace avx2
#endif

} // namespace sinevid::kernels
