#include "doctest.h"

#include "sinevid/kernels.hpp"
#include "sinevid/random.hpp"

#include <cmath>
#include <vector>

using namespace sinevid;
namespace k = sinevid::kernels;

namespace {

std::vector<float> random_floats(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0)
{
    std::vector<float> v(n);
    for (float& x : v)
        x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

// Both results are sums of k products; FMA contraction and reordering move
// them by a few ulps of the absolute-value sum.
void check_close(const std::vector<float>& a, const std::vector<float>& b, double tol)
{
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        REQUIRE(std::abs(double(a[i]) - double(b[i])) <= tol * (1.0 + std::abs(double(a[i]))));
}

bool have_avx2()
{
    if (!k::isa_available(k::Isa::avx2)) {
        MESSAGE("AVX2 variant unavailable on this machine; equivalence test skipped");
        return false;
    }
    return true;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar gemm matches naive triple loop in both operand layouts")
{
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const k::index_t m = 1 + rng.index(13), n = 1 + rng.index(37), kk = 1 + rng.index(19);
        const bool transposed = trial % 2;
        const auto a = random_floats(rng, m * kk), b = random_floats(rng, kk * n);
        std::vector<float> c(m * n), ref(m * n, 0.0f);
        const k::index_t a_rs = transposed ? 1 : kk, a_cs = transposed ? m : 1;
        k::scalar::gemm<float>({m, n, kk, a.data(), a_rs, a_cs, b.data(), n, c.data(), n, false});
        for (k::index_t i = 0; i < m; ++i)
            for (k::index_t j = 0; j < n; ++j) {
                double s = 0;
                for (k::index_t p = 0; p < kk; ++p)
                    s += double(a[i * a_rs + p * a_cs]) * b[p * n + j];
                ref[i * n + j] = float(s);
            }
        check_close(c, ref, 1e-5);
    }
}

TEST_CASE("avx2 gemm equals scalar gemm on ragged shapes, with and without accumulation")
{
    if (!have_avx2())
        return;
#if defined(SINEVID_HAVE_AVX2)
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const k::index_t m = 1 + rng.index(20), n = 1 + rng.index(70), kk = 1 + rng.index(40);
        const bool transposed = rng.index(2), accumulate = rng.index(2);
        const auto a = random_floats(rng, m * kk), b = random_floats(rng, kk * n);
        const auto init = random_floats(rng, m * n);
        std::vector<float> c1 = init, c2 = init;
        const k::index_t a_rs = transposed ? 1 : kk, a_cs = transposed ? m : 1;
        k::scalar::gemm<float>({m, n, kk, a.data(), a_rs, a_cs, b.data(), n, c1.data(), n, accumulate});
        k::avx2::gemm({m, n, kk, a.data(), a_rs, a_cs, b.data(), n, c2.data(), n, accumulate});
        check_close(c1, c2, 1e-5);
    }
#endif
}

TEST_CASE("avx2 gemm rows are independent of the row count")
{
    // Temporal purity relies on each output row being computed the same
    // way whatever panel it falls into.
    if (!have_avx2())
        return;
#if defined(SINEVID_HAVE_AVX2)
    Rng rng(13);
    const k::index_t n = 64, kk = 64;
    const auto row = random_floats(rng, kk), b = random_floats(rng, kk * n);
    std::vector<float> single(n);
    k::avx2::gemm({1, n, kk, row.data(), kk, 1, b.data(), n, single.data(), n, false});
    for (k::index_t m : {2, 5, 6, 7, 13}) {
        std::vector<float> a;
        for (k::index_t i = 0; i < m; ++i)
            a.insert(a.end(), row.begin(), row.end());
        std::vector<float> c(m * n);
        k::avx2::gemm({m, n, kk, a.data(), kk, 1, b.data(), n, c.data(), n, false});
        for (k::index_t i = 0; i < m; ++i)
            for (k::index_t j = 0; j < n; ++j)
                REQUIRE(c[i * n + j] == single[j]);
    }
#endif
}

TEST_CASE("sine kernels agree with libm and across variants")
{
    Rng rng(14);
    auto x = random_floats(rng, 1003, -3.0, 3.0);
    x.push_back(0.0f);
    x.push_back(400.0f); // beyond the vectorized reduction range
    const float omega = 30.0f;
    const k::index_t n = static_cast<k::index_t>(x.size());
    std::vector<float> ys(n), gs(n, 0.5f);
    const auto gy = random_floats(rng, n);
    k::scalar::sine_forward(n, omega, x.data(), ys.data());
    k::scalar::sine_backward(n, omega, x.data(), gy.data(), gs.data());
    for (k::index_t i = 0; i < n; ++i) {
        REQUIRE(std::abs(ys[i] - std::sin(double(omega) * double(x[i]))) < 2e-5);
        const double ref = 0.5 + double(gy[i]) * omega * std::cos(double(omega) * double(x[i]));
        REQUIRE(std::abs(gs[i] - ref) < 1e-3);
    }
#if defined(SINEVID_HAVE_AVX2)
    if (have_avx2()) {
        std::vector<float> yv(n), gv(n, 0.5f);
        k::avx2::sine_forward(n, omega, x.data(), yv.data());
        k::avx2::sine_backward(n, omega, x.data(), gy.data(), gv.data());
        for (k::index_t i = 0; i < n; ++i) {
            REQUIRE(std::abs(yv[i] - ys[i]) < 2e-6);
            REQUIRE(std::abs(gv[i] - gs[i]) < 2e-4);
        }
    }
#endif
}

TEST_CASE("elementwise kernels: avx2 equals scalar")
{
    if (!have_avx2())
        return;
#if defined(SINEVID_HAVE_AVX2)
    Rng rng(15);
    for (k::index_t cols : {1, 7, 8, 9, 64, 67}) {
        const k::index_t rows = 12, group = 4;
        const auto a = random_floats(rng, rows * cols), b = random_floats(rng, rows / group * cols);
        std::vector<float> o1(rows * cols), o2(rows * cols);
        k::scalar::add_rows<float>(rows, cols, group, a.data(), b.data(), o1.data());
        k::avx2::add_rows(rows, cols, group, a.data(), b.data(), o2.data());
        CHECK(o1 == o2);

        std::vector<float> s1(rows / group * cols, 0.25f), s2 = s1;
        k::scalar::sum_rows_grouped<float>(rows, cols, group, a.data(), s1.data());
        k::avx2::sum_rows_grouped(rows, cols, group, a.data(), s2.data());
        check_close(s1, s2, 1e-6);

        std::vector<float> y1 = a, y2 = a;
        const auto x = random_floats(rng, rows * cols);
        k::scalar::axpy<float>(rows * cols, -0.3f, x.data(), y1.data());
        k::avx2::axpy(rows * cols, -0.3f, x.data(), y2.data());
        check_close(y1, y2, 1e-6);

        const float d1 = k::scalar::squared_distance<float>(rows * cols, a.data(), x.data());
        const float d2 = k::avx2::squared_distance(rows * cols, a.data(), x.data());
        CHECK(std::abs(d1 - d2) <= 1e-5f * d1);

        std::vector<float> z1(rows * cols, 1.0f), z2 = z1;
        k::scalar::scaled_difference<float>(rows * cols, 0.7f, a.data(), x.data(), z1.data());
        k::avx2::scaled_difference(rows * cols, 0.7f, a.data(), x.data(), z2.data());
        check_close(z1, z2, 1e-6);
    }
#endif
}

TEST_CASE("dispatch can be pinned to the scalar path")
{
    const k::Isa before = k::active_isa();
    k::set_active_isa(k::Isa::scalar);
    CHECK(k::active_isa() == k::Isa::scalar);
    CHECK(k::isa_name(k::Isa::scalar) == "scalar");
    k::set_active_isa(before);
}

}
