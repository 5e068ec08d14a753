// AVX2/FMA variants of the float kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; nothing here may be called unless the
// dispatcher has confirmed CPU support.

#include "sinevid/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace sinevid::kernels::avx2 {
namespace {

// Lanes with |x| above this go through libm; the three-constant Cody-Waite
// reduction below loses accuracy past it.
constexpr float kReductionLimit = 8192.0f;

struct SinCos {
    __m256 sin;
    __m256 cos;
};

// Cephes-style single precision sincos: reduce to [-pi/4, pi/4] by octant,
// evaluate both minimax polynomials, then pick and sign-correct per lane.
inline SinCos sincos_ps(__m256 x)
{
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    __m256 sign_sin = _mm256_and_ps(x, sign_mask);
    x = _mm256_andnot_ps(sign_mask, x);

    __m256i j = _mm256_cvttps_epi32(_mm256_mul_ps(x, _mm256_set1_ps(1.27323954473516f)));
    j = _mm256_add_epi32(j, _mm256_set1_epi32(1));
    j = _mm256_and_si256(j, _mm256_set1_epi32(~1));
    const __m256 y = _mm256_cvtepi32_ps(j);

    const __m256 swap_sin = _mm256_castsi256_ps(
        _mm256_slli_epi32(_mm256_and_si256(j, _mm256_set1_epi32(4)), 29));
    const __m256 use_cos_poly = _mm256_castsi256_ps(
        _mm256_cmpeq_epi32(_mm256_and_si256(j, _mm256_set1_epi32(2)), _mm256_setzero_si256()));
    const __m256 sign_cos = _mm256_castsi256_ps(_mm256_slli_epi32(
        _mm256_andnot_si256(_mm256_sub_epi32(j, _mm256_set1_epi32(2)), _mm256_set1_epi32(4)), 29));
    sign_sin = _mm256_xor_ps(sign_sin, swap_sin);

    x = _mm256_fmadd_ps(y, _mm256_set1_ps(-0.78515625f), x);
    x = _mm256_fmadd_ps(y, _mm256_set1_ps(-2.4187564849853515625e-4f), x);
    x = _mm256_fmadd_ps(y, _mm256_set1_ps(-3.77489497744594108e-8f), x);

    const __m256 z = _mm256_mul_ps(x, x);

    __m256 pc = _mm256_set1_ps(2.443315711809948e-5f);
    pc = _mm256_fmadd_ps(pc, z, _mm256_set1_ps(-1.388731625493765e-3f));
    pc = _mm256_fmadd_ps(pc, z, _mm256_set1_ps(4.166664568298827e-2f));
    pc = _mm256_mul_ps(_mm256_mul_ps(pc, z), z);
    pc = _mm256_fnmadd_ps(_mm256_set1_ps(0.5f), z, pc);
    pc = _mm256_add_ps(pc, _mm256_set1_ps(1.0f));

    __m256 ps = _mm256_set1_ps(-1.9515295891e-4f);
    ps = _mm256_fmadd_ps(ps, z, _mm256_set1_ps(8.3321608736e-3f));
    ps = _mm256_fmadd_ps(ps, z, _mm256_set1_ps(-1.6666654611e-1f));
    ps = _mm256_fmadd_ps(_mm256_mul_ps(ps, z), x, x);

    const __m256 s = _mm256_blendv_ps(pc, ps, use_cos_poly);
    const __m256 c = _mm256_blendv_ps(ps, pc, use_cos_poly);
    return {_mm256_xor_ps(s, sign_sin), _mm256_xor_ps(c, sign_cos)};
}

inline bool any_out_of_range(__m256 x)
{
    const __m256 ax = _mm256_andnot_ps(_mm256_set1_ps(-0.0f), x);
    // NaN compares false here; NaNs are left to propagate through the polynomial.
    return _mm256_movemask_ps(_mm256_cmp_ps(ax, _mm256_set1_ps(kReductionLimit), _CMP_GT_OQ)) != 0;
}

inline __m256i tail_mask(index_t width)
{
    alignas(32) static const std::int32_t table[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                       0,  0,  0,  0,  0,  0,  0,  0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - width));
}

template <int MR>
inline void block_x16(index_t k, const float* a, index_t a_rs, index_t a_cs, const float* b,
                      index_t ldb, float* c, index_t ldc, bool accumulate)
{
    __m256 c0[MR];
    __m256 c1[MR];
    for (int r = 0; r < MR; ++r) {
        if (accumulate) {
            c0[r] = _mm256_loadu_ps(c + r * ldc);
            c1[r] = _mm256_loadu_ps(c + r * ldc + 8);
        } else {
            c0[r] = _mm256_setzero_ps();
            c1[r] = _mm256_setzero_ps();
        }
    }
    for (index_t p = 0; p < k; ++p) {
        const float* bp = b + p * ldb;
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        const float* ap = a + p * a_cs;
        for (int r = 0; r < MR; ++r) {
            const __m256 av = _mm256_broadcast_ss(ap + r * a_rs);
            c0[r] = _mm256_fmadd_ps(av, b0, c0[r]);
            c1[r] = _mm256_fmadd_ps(av, b1, c1[r]);
        }
    }
    for (int r = 0; r < MR; ++r) {
        _mm256_storeu_ps(c + r * ldc, c0[r]);
        _mm256_storeu_ps(c + r * ldc + 8, c1[r]);
    }
}

// Column block narrower than or equal to 8 lanes, masked at the edge.
template <int MR>
inline void block_x8(index_t k, index_t width, const float* a, index_t a_rs, index_t a_cs,
                     const float* b, index_t ldb, float* c, index_t ldc, bool accumulate)
{
    const __m256i mask = tail_mask(width);
    __m256 acc[MR];
    for (int r = 0; r < MR; ++r)
        acc[r] = accumulate ? _mm256_maskload_ps(c + r * ldc, mask) : _mm256_setzero_ps();
    for (index_t p = 0; p < k; ++p) {
        const __m256 bv = _mm256_maskload_ps(b + p * ldb, mask);
        const float* ap = a + p * a_cs;
        for (int r = 0; r < MR; ++r)
            acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(ap + r * a_rs), bv, acc[r]);
    }
    for (int r = 0; r < MR; ++r)
        _mm256_maskstore_ps(c + r * ldc, mask, acc[r]);
}

template <int MR>
void row_panel(const GemmArgs<float>& g, index_t i0)
{
    const float* a = g.a + i0 * g.a_rs;
    float* c = g.c + i0 * g.ldc;
    index_t j = 0;
    for (; j + 16 <= g.n; j += 16)
        block_x16<MR>(g.k, a, g.a_rs, g.a_cs, g.b + j, g.ldb, c + j, g.ldc, g.accumulate);
    for (; j < g.n; j += 8) {
        const index_t width = g.n - j < 8 ? g.n - j : 8;
        block_x8<MR>(g.k, width, a, g.a_rs, g.a_cs, g.b + j, g.ldb, c + j, g.ldc, g.accumulate);
    }
}

constexpr int kRowBlock = 6;

} // namespace

void gemm(const GemmArgs<float>& g)
{
    index_t i = 0;
    for (; i + kRowBlock <= g.m; i += kRowBlock)
        row_panel<kRowBlock>(g, i);
    switch (g.m - i) {
    case 5: row_panel<5>(g, i); break;
    case 4: row_panel<4>(g, i); break;
    case 3: row_panel<3>(g, i); break;
    case 2: row_panel<2>(g, i); break;
    case 1: row_panel<1>(g, i); break;
    default: break;
    }
}

void sine_forward(index_t n, float omega, const float* x, float* y)
{
    const __m256 w = _mm256_set1_ps(omega);
    index_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 arg = _mm256_mul_ps(w, _mm256_loadu_ps(x + i));
        if (any_out_of_range(arg)) {
            for (index_t q = i; q < i + 8; ++q)
                y[q] = std::sin(omega * x[q]);
            continue;
        }
        _mm256_storeu_ps(y + i, sincos_ps(arg).sin);
    }
    for (; i < n; ++i)
        y[i] = std::sin(omega * x[i]);
}

void sine_backward(index_t n, float omega, const float* x, const float* gy, float* gx)
{
    const __m256 w = _mm256_set1_ps(omega);
    index_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 arg = _mm256_mul_ps(w, _mm256_loadu_ps(x + i));
        if (any_out_of_range(arg)) {
            for (index_t q = i; q < i + 8; ++q)
                gx[q] += gy[q] * omega * std::cos(omega * x[q]);
            continue;
        }
        const __m256 d = _mm256_mul_ps(_mm256_mul_ps(_mm256_loadu_ps(gy + i), w), sincos_ps(arg).cos);
        _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), d));
    }
    for (; i < n; ++i)
        gx[i] += gy[i] * omega * std::cos(omega * x[i]);
}

void add_rows(index_t rows, index_t cols, index_t group_rows, const float* a, const float* b, float* out)
{
    for (index_t i = 0; i < rows; ++i) {
        const float* arow = a + i * cols;
        const float* brow = b + (i / group_rows) * cols;
        float* orow = out + i * cols;
        index_t j = 0;
        for (; j + 8 <= cols; j += 8)
            _mm256_storeu_ps(orow + j, _mm256_add_ps(_mm256_loadu_ps(arow + j), _mm256_loadu_ps(brow + j)));
        for (; j < cols; ++j)
            orow[j] = arow[j] + brow[j];
    }
}

void sum_rows_grouped(index_t rows, index_t cols, index_t group_rows, const float* g, float* out)
{
    for (index_t i = 0; i < rows; ++i) {
        const float* grow = g + i * cols;
        float* orow = out + (i / group_rows) * cols;
        index_t j = 0;
        for (; j + 8 <= cols; j += 8)
            _mm256_storeu_ps(orow + j, _mm256_add_ps(_mm256_loadu_ps(orow + j), _mm256_loadu_ps(grow + j)));
        for (; j < cols; ++j)
            orow[j] += grow[j];
    }
}

void axpy(index_t n, float alpha, const float* x, float* y)
{
    const __m256 av = _mm256_set1_ps(alpha);
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

float squared_distance(index_t n, const float* a, const float* b)
{
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    index_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 d0 = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        const __m256 d1 = _mm256_sub_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8));
        acc0 = _mm256_fmadd_ps(d0, d0, acc0);
        acc1 = _mm256_fmadd_ps(d1, d1, acc1);
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, _mm256_add_ps(acc0, acc1));
    float total = 0.0f;
    for (float v : lanes)
        total += v;
    for (; i < n; ++i) {
        const float d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void scaled_difference(index_t n, float alpha, const float* a, const float* b, float* out)
{
    const __m256 av = _mm256_set1_ps(alpha);
    index_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(out + i, _mm256_fmadd_ps(av, d, _mm256_loadu_ps(out + i)));
    }
    for (; i < n; ++i)
        out[i] += alpha * (a[i] - b[i]);
}

} // namespace sinevid::kernels::avx2
