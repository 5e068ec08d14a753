#include "sinevid/kernels.hpp"

#include "sinevid/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace sinevid::kernels {
namespace {

bool cpu_has_avx2() noexcept
{
#if defined(SINEVID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() noexcept
{
    if (const char* env = std::getenv("SINEVID_KERNELS"); env && std::string(env) == "scalar")
        return Isa::scalar;
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active()
{
    static std::atomic<Isa> isa{detect()};
    return isa;
}

bool use_avx2() noexcept
{
    return active().load(std::memory_order_relaxed) == Isa::avx2;
}

} // namespace

std::string_view isa_name(Isa isa) noexcept
{
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) noexcept
{
    return isa == Isa::scalar || cpu_has_avx2();
}

Isa active_isa() noexcept
{
    return active().load();
}

void set_active_isa(Isa isa)
{
    if (!isa_available(isa))
        throw ContractError("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this machine");
    active().store(isa);
}

#if defined(SINEVID_HAVE_AVX2)
#define SINEVID_DISPATCH_F32(call_avx2, call_scalar) \
    if (use_avx2()) {                                \
        call_avx2;                                   \
    } else {                                         \
        call_scalar;                                 \
    }
#else
#define SINEVID_DISPATCH_F32(call_avx2, call_scalar) call_scalar;
#endif

template <>
void gemm<float>(const GemmArgs<float>& g)
{
    SINEVID_DISPATCH_F32(avx2::gemm(g), scalar::gemm(g))
}
template <>
void gemm<double>(const GemmArgs<double>& g)
{
    scalar::gemm(g);
}

template <>
void sine_forward<float>(index_t n, float omega, const float* x, float* y)
{
    SINEVID_DISPATCH_F32(avx2::sine_forward(n, omega, x, y), scalar::sine_forward(n, omega, x, y))
}
template <>
void sine_forward<double>(index_t n, double omega, const double* x, double* y)
{
    scalar::sine_forward(n, omega, x, y);
}

template <>
void sine_backward<float>(index_t n, float omega, const float* x, const float* gy, float* gx)
{
    SINEVID_DISPATCH_F32(avx2::sine_backward(n, omega, x, gy, gx), scalar::sine_backward(n, omega, x, gy, gx))
}
template <>
void sine_backward<double>(index_t n, double omega, const double* x, const double* gy, double* gx)
{
    scalar::sine_backward(n, omega, x, gy, gx);
}

template <>
void add_rows<float>(index_t rows, index_t cols, index_t group_rows, const float* a, const float* b, float* out)
{
    SINEVID_DISPATCH_F32(avx2::add_rows(rows, cols, group_rows, a, b, out),
                         scalar::add_rows(rows, cols, group_rows, a, b, out))
}
template <>
void add_rows<double>(index_t rows, index_t cols, index_t group_rows, const double* a, const double* b,
                      double* out)
{
    scalar::add_rows(rows, cols, group_rows, a, b, out);
}

template <>
void sum_rows_grouped<float>(index_t rows, index_t cols, index_t group_rows, const float* g, float* out)
{
    SINEVID_DISPATCH_F32(avx2::sum_rows_grouped(rows, cols, group_rows, g, out),
                         scalar::sum_rows_grouped(rows, cols, group_rows, g, out))
}
template <>
void sum_rows_grouped<double>(index_t rows, index_t cols, index_t group_rows, const double* g, double* out)
{
    scalar::sum_rows_grouped(rows, cols, group_rows, g, out);
}

template <>
void axpy<float>(index_t n, float alpha, const float* x, float* y)
{
    SINEVID_DISPATCH_F32(avx2::axpy(n, alpha, x, y), scalar::axpy(n, alpha, x, y))
}
template <>
void axpy<double>(index_t n, double alpha, const double* x, double* y)
{
    scalar::axpy(n, alpha, x, y);
}

template <>
float squared_distance<float>(index_t n, const float* a, const float* b)
{
#if defined(SINEVID_HAVE_AVX2)
    if (use_avx2())
        return avx2::squared_distance(n, a, b);
#endif
    return scalar::squared_distance(n, a, b);
}
template <>
double squared_distance<double>(index_t n, const double* a, const double* b)
{
    return scalar::squared_distance(n, a, b);
}

template <>
void scaled_difference<float>(index_t n, float alpha, const float* a, const float* b, float* out)
{
    SINEVID_DISPATCH_F32(avx2::scaled_difference(n, alpha, a, b, out),
                         scalar::scaled_difference(n, alpha, a, b, out))
}
template <>
void scaled_difference<double>(index_t n, double alpha, const double* a, const double* b, double* out)
{
    scalar::scaled_difference(n, alpha, a, b, out);
}

#undef SINEVID_DISPATCH_F32

} // namespace sinevid::kernels
