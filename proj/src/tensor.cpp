#include "sinevid/tensor.hpp"

#include "sinevid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <type_traits>

namespace sinevid {

std::string shape_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t shape_numel(const Shape& shape)
{
    std::size_t n = 1;
    for (auto e : shape)
        n *= e;
    return n;
}

namespace {
void check_shape(const Shape& shape)
{
    if (shape.empty())
        throw DimensionError("tensor shape must have at least one axis");
    for (auto e : shape)
        if (e == 0)
            throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
}
} // namespace

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape))
{
    check_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
{
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_))
        throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string(shape_));
}

template <class T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
{
    return Tensor({rows, cols}, std::vector<T>(values));
}

template <class T>
std::size_t Tensor<T>::rows() const noexcept
{
    if (shape_.size() < 2)
        return shape_.empty() ? 0 : 1;
    return data_.size() / shape_.back();
}

template <class T>
std::size_t Tensor<T>::cols() const noexcept
{
    return shape_.empty() ? 0 : shape_.back();
}

template <class T>
T Tensor<T>::item() const
{
    if (data_.size() != 1)
        throw ContractError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
}

template <class T>
bool Tensor<T>::all_finite() const noexcept
{
    // Exponent field all ones means Inf or NaN. The integer OR-reduction
    // vectorizes where std::isfinite does not.
    using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    constexpr Bits exponent = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
    Bits bad = 0;
    for (const T v : data_) {
        Bits b;
        std::memcpy(&b, &v, sizeof b);
        bad |= Bits((b & exponent) == exponent);
    }
    return bad == 0;
}

template <class T>
void Tensor<T>::require_finite(const char* what) const
{
    if (!all_finite())
        throw NonFiniteError(std::string("non-finite value produced by ") + what);
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), data_);
}

template <class T>
Tensor<T> Tensor<T>::transposed() const
{
    const std::size_t r = rows();
    const std::size_t c = cols();
    std::vector<T> out(data_.size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out[j * r + i] = data_[i * c + j];
    return Tensor({c, r}, std::move(out));
}

template <class T>
void Tensor<T>::fill(T value)
{
    std::fill(data_.begin(), data_.end(), value);
}

template <class T>
bool same_bits(const Tensor<T>& a, const Tensor<T>& b)
{
    return a.shape() == b.shape() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

template class Tensor<float>;
template class Tensor<double>;
template bool same_bits(const Tensor<float>&, const Tensor<float>&);
template bool same_bits(const Tensor<double>&, const Tensor<double>&);

} // namespace sinevid
