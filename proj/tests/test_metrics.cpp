#include "doctest.h"

#include "sinevid/errors.hpp"
#include "sinevid/metrics.hpp"
#include "sinevid/random.hpp"

#include "oracle.hpp"

#include <cmath>
#include <limits>

using namespace sinevid;

namespace {

VideoTensor random_video(Rng& rng, std::size_t t, std::size_t h, std::size_t w)
{
    VideoTensor v(t, h, w);
    for (float& x : v.values)
        x = static_cast<float>(rng.uniform());
    return v;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr closed forms")
{
    const VideoTensor zero(2, 3, 3, 0.0f), half(2, 3, 3, 0.5f), tenth(2, 3, 3, 0.1f);
    CHECK(psnr(zero, zero) == std::numeric_limits<double>::infinity());
    CHECK(std::abs(psnr(zero, half) - 6.0206) < 1e-3);
    CHECK(std::abs(psnr(zero, tenth) - 20.0) < 1e-3);
    CHECK(mse(zero, half) == 0.25);
    CHECK_THROWS_AS(psnr(zero, VideoTensor(2, 3, 4)), DimensionError);
}

TEST_CASE("psnr and ssim3d are symmetric")
{
    Rng rng(1);
    const auto a = random_video(rng, 5, 9, 8), b = random_video(rng, 5, 9, 8);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(ssim3d(a, b) == doctest::Approx(ssim3d(b, a)).epsilon(1e-12));
}

TEST_CASE("ssim3d basic cases")
{
    Rng rng(2);
    const auto a = random_video(rng, 4, 10, 10);
    CHECK(ssim3d(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    VideoTensor inv = a;
    for (float& x : inv.values)
        x = 1.0f - x;
    CHECK(ssim3d(a, inv) < 1.0);
    CHECK_THROWS_AS(ssim3d(a, VideoTensor(4, 10, 9)), DimensionError);
    const VideoTensor tiny(1, 1, 1, 0.3f);
    CHECK(ssim3d(tiny, tiny) == doctest::Approx(1.0));
}

TEST_CASE("ssim3d matches the brute-force windowed oracle")
{
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = random_video(rng, 8, 16, 16);
        auto b = a;
        for (float& x : b.values)
            x = std::clamp(x + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
        CHECK(std::abs(ssim3d(a, b) - oracle::ssim3d(a, b)) < 1e-6);
        const auto c = random_video(rng, 8, 16, 16);
        CHECK(std::abs(ssim3d(a, c) - oracle::ssim3d(a, c)) < 1e-6);
    }
    // Axes shorter than the window.
    const auto a = random_video(rng, 3, 5, 9), b = random_video(rng, 3, 5, 9);
    CHECK(std::abs(ssim3d(a, b) - oracle::ssim3d(a, b)) < 1e-6);
}

TEST_CASE("ssim3d with one frame is the 2D SSIM")
{
    // The 2D reference: same 7x7 windows over the single frame.
    Rng rng(4);
    const auto a = random_video(rng, 1, 12, 11), b = random_video(rng, 1, 12, 11);
    double total = 0;
    std::size_t count = 0;
    for (std::size_t i0 = 0; i0 + 7 <= 12; ++i0)
        for (std::size_t j0 = 0; j0 + 7 <= 11; ++j0) {
            double ma = 0, mb = 0;
            for (std::size_t i = i0; i < i0 + 7; ++i)
                for (std::size_t j = j0; j < j0 + 7; ++j) {
                    ma += a.at(0, i, j) / 49.0;
                    mb += b.at(0, i, j) / 49.0;
                }
            double va = 0, vb = 0, c = 0;
            for (std::size_t i = i0; i < i0 + 7; ++i)
                for (std::size_t j = j0; j < j0 + 7; ++j) {
                    va += (a.at(0, i, j) - ma) * (a.at(0, i, j) - ma) / 49.0;
                    vb += (b.at(0, i, j) - mb) * (b.at(0, i, j) - mb) / 49.0;
                    c += (a.at(0, i, j) - ma) * (b.at(0, i, j) - mb) / 49.0;
                }
            total += (2 * ma * mb + 1e-4) * (2 * c + 9e-4) / ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
            ++count;
        }
    CHECK(std::abs(ssim3d(a, b) - total / count) < 1e-9);
}

TEST_CASE("quality report bundles the three numbers")
{
    const VideoTensor zero(2, 8, 8, 0.0f), half(2, 8, 8, 0.5f);
    const QualityReport q = quality_report(zero, half);
    CHECK(q.mse == 0.25);
    CHECK(std::abs(q.psnr_db - 6.0206) < 1e-3);
    CHECK(q.ssim3d == doctest::Approx(ssim3d(zero, half)));
}

TEST_CASE("regression metrics examples")
{
    const std::vector<double> t{1, 2, 3, 5};
    auto m = regression_metrics(t, t);
    CHECK(m.mae == 0.0);
    CHECK(m.rmse == 0.0);
    CHECK(m.r2 == 1.0);

    const std::vector<double> mean_pred(4, 2.75);
    CHECK(regression_metrics(mean_pred, t).r2 == doctest::Approx(0.0));

    m = regression_metrics(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2});
    CHECK(m.mae == doctest::Approx(2.0 / 3));
    CHECK(m.rmse == doctest::Approx(std::sqrt(2.0 / 3)));
    CHECK(m.r2 == -std::numeric_limits<double>::infinity());
    CHECK(regression_metrics(std::vector<double>{2, 2}, std::vector<double>{2, 2}).r2 == 0.0);

    CHECK_THROWS_AS(regression_metrics(std::vector<double>{1}, std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("MAE never exceeds RMSE")
{
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(1 + rng.index(20)), t(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = rng.normal();
            t[i] = rng.normal();
        }
        const auto m = regression_metrics(p, t);
        CHECK(m.mae <= m.rmse + 1e-15);
    }
}

TEST_CASE("classification metrics examples")
{
    const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
    const std::vector<int> y{1, 0, 1, 0};
    const auto m = classification_metrics(s, y);
    CHECK(*m.auroc == doctest::Approx(0.75));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.5));

    CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(std::vector<double>(6, 0.4), std::vector<int>{0, 1, 0, 1, 1, 0}) == 0.5);

    // No predicted positives: precision and recall are both 0, F1 defined 0.
    const auto none = classification_metrics(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 0});
    CHECK(none.f1 == 0.0);
    CHECK(none.accuracy == 0.5);
}

TEST_CASE("single-class labels: AUROC undefined, ACC and F1 still reported")
{
    const std::vector<double> s{0.9, 0.2, 0.7};
    const std::vector<int> y{1, 1, 1};
    CHECK_THROWS_AS(auroc(s, y), UndefinedMetricError);
    const auto m = classification_metrics(s, y);
    CHECK_FALSE(m.auroc.has_value());
    CHECK(m.accuracy == doctest::Approx(2.0 / 3));
    CHECK(m.f1 == doctest::Approx(0.8));
}

TEST_CASE("AUROC equals exhaustive pair counting on every label set up to size 8")
{
    Rng rng(6);
    for (std::size_t n = 2; n <= 8; ++n) {
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<int> y(n);
            int pos = 0;
            for (std::size_t i = 0; i < n; ++i)
                pos += y[i] = (mask >> i) & 1;
            if (pos == 0 || pos == int(n))
                continue;
            // Coarse scores so ties are common.
            std::vector<double> s(n);
            for (double& x : s)
                x = double(rng.index(4)) / 4.0;
            REQUIRE(auroc(s, y) == doctest::Approx(oracle::auroc_pairs(s, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("AUROC is invariant under strictly monotone score transforms")
{
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(12), s2(12);
        std::vector<int> y(12);
        for (std::size_t i = 0; i < 12; ++i) {
            s[i] = double(rng.index(6)) - 2.5;
            s2[i] = std::exp(3 * s[i]) + 7;
            y[i] = i % 3 == 0;
        }
        CHECK(auroc(s, y) == auroc(s2, y));
    }
}

}
