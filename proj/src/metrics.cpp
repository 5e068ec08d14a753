#include "sinevid/metrics.hpp"

#include "sinevid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sinevid {

namespace {

void require_same_dims(const VideoTensor& a, const VideoTensor& b, const char* what)
{
    if (!a.same_dims(b))
        throw DimensionError(std::string(what) + ": videos differ in shape (" + std::to_string(a.frames) + "x" +
                             std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                             std::to_string(b.frames) + "x" + std::to_string(b.height) + "x" +
                             std::to_string(b.width) + ")");
    if (a.values.empty())
        throw ContractError(std::string(what) + ": empty video");
}

// Summed-volume table with a zero border: S[t+1][i+1][j+1] = sum over [0..t][0..i][0..j].
class SummedVolume {
public:
    SummedVolume(std::size_t T, std::size_t H, std::size_t W)
        : h_(H + 1), w_(W + 1), data_((T + 1) * (H + 1) * (W + 1), 0.0)
    {
    }

    template <class F>
    void build(std::size_t T, std::size_t H, std::size_t W, F&& value)
    {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j)
                    at(t + 1, i + 1, j + 1) = value(t, i, j) + at(t, i + 1, j + 1) + at(t + 1, i, j + 1) +
                                              at(t + 1, i + 1, j) - at(t, i, j + 1) - at(t, i + 1, j) -
                                              at(t + 1, i, j) + at(t, i, j);
    }

    // Sum over the box [t0, t1) x [i0, i1) x [j0, j1).
    double box(std::size_t t0, std::size_t t1, std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) const
    {
        return at(t1, i1, j1) - at(t0, i1, j1) - at(t1, i0, j1) - at(t1, i1, j0) + at(t0, i0, j1) +
               at(t0, i1, j0) + at(t1, i0, j0) - at(t0, i0, j0);
    }

private:
    double& at(std::size_t t, std::size_t i, std::size_t j) { return data_[(t * h_ + i) * w_ + j]; }
    double at(std::size_t t, std::size_t i, std::size_t j) const { return data_[(t * h_ + i) * w_ + j]; }

    std::size_t h_, w_;
    std::vector<double> data_;
};

} // namespace

double mse(const VideoTensor& a, const VideoTensor& b)
{
    require_same_dims(a, b, "mse");
    double se = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
        se += d * d;
    }
    return se / static_cast<double>(a.values.size());
}

double psnr(const VideoTensor& a, const VideoTensor& b)
{
    const double m = mse(a, b);
    if (m == 0.0)
        return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double ssim3d(const VideoTensor& a, const VideoTensor& b)
{
    require_same_dims(a, b, "ssim3d");
    const std::size_t T = a.frames, H = a.height, W = a.width;
    const std::size_t wt = std::min(kSsimWindow, T), wh = std::min(kSsimWindow, H), ww = std::min(kSsimWindow, W);

    SummedVolume sa(T, H, W), sb(T, H, W), saa(T, H, W), sbb(T, H, W), sab(T, H, W);
    sa.build(T, H, W, [&](auto t, auto i, auto j) { return static_cast<double>(a.at(t, i, j)); });
    sb.build(T, H, W, [&](auto t, auto i, auto j) { return static_cast<double>(b.at(t, i, j)); });
    saa.build(T, H, W, [&](auto t, auto i, auto j) {
        const double v = a.at(t, i, j);
        return v * v;
    });
    sbb.build(T, H, W, [&](auto t, auto i, auto j) {
        const double v = b.at(t, i, j);
        return v * v;
    });
    sab.build(T, H, W, [&](auto t, auto i, auto j) {
        return static_cast<double>(a.at(t, i, j)) * static_cast<double>(b.at(t, i, j));
    });

    const double n = static_cast<double>(wt * wh * ww);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t t = 0; t + wt <= T; ++t) {
        for (std::size_t i = 0; i + wh <= H; ++i) {
            for (std::size_t j = 0; j + ww <= W; ++j) {
                const double mu_a = sa.box(t, t + wt, i, i + wh, j, j + ww) / n;
                const double mu_b = sb.box(t, t + wt, i, i + wh, j, j + ww) / n;
                const double var_a = saa.box(t, t + wt, i, i + wh, j, j + ww) / n - mu_a * mu_a;
                const double var_b = sbb.box(t, t + wt, i, i + wh, j, j + ww) / n - mu_b * mu_b;
                const double cov = sab.box(t, t + wt, i, i + wh, j, j + ww) / n - mu_a * mu_b;
                total += ((2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2)) /
                         ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
                ++windows;
            }
        }
    }
    return total / static_cast<double>(windows);
}

QualityReport quality_report(const VideoTensor& reference, const VideoTensor& reconstruction)
{
    QualityReport q;
    q.mse = mse(reference, reconstruction);
    q.psnr_db = q.mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(q.mse);
    q.ssim3d = ssim3d(reference, reconstruction);
    return q;
}

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> target)
{
    if (pred.size() != target.size())
        throw DimensionError("regression metrics: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(target.size()) + " targets");
    if (pred.empty())
        throw ContractError("regression metrics: empty input");
    const double n = static_cast<double>(pred.size());
    const double mean_t = std::accumulate(target.begin(), target.end(), 0.0) / n;
    double abs_sum = 0.0, ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        abs_sum += std::abs(d);
        ss_res += d * d;
        ss_tot += (target[i] - mean_t) * (target[i] - mean_t);
    }
    RegressionMetrics m;
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(ss_res / n);
    if (ss_tot > 0.0)
        m.r2 = 1.0 - ss_res / ss_tot;
    else
        m.r2 = ss_res == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return m;
}

double auroc(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw DimensionError("auroc: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw ContractError("auroc: labels must be 0 or 1");
        pos += static_cast<std::size_t>(l);
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw UndefinedMetricError("auroc is undefined when only one class is present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
            ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1 .. j
        for (std::size_t q = i; q < j; ++q)
            if (labels[order[q]] == 1)
                rank_sum += midrank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double threshold)
{
    if (scores.size() != labels.size())
        throw DimensionError("classification metrics: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    if (scores.empty())
        throw ContractError("classification metrics: empty input");
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw ContractError("classification metrics: labels must be 0 or 1");
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels[i] == 1;
        has_pos |= actual;
        has_neg |= !actual;
        correct += predicted == actual;
        tp += predicted && actual;
        fp += predicted && !actual;
        fn += !predicted && actual;
    }
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    if (has_pos && has_neg)
        m.auroc = auroc(scores, labels);
    return m;
}

} // namespace sinevid
