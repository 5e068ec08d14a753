#pragma once

#include "sinevid/video.hpp"

#include <optional>
#include <span>

namespace sinevid {

struct QualityReport {
    double psnr_db = 0.0;
    double ssim3d = 0.0; // in [-1, 1]
    double mse = 0.0;
};

double mse(const VideoTensor& a, const VideoTensor& b);

// -10 log10(MSE) with peak 1; +infinity when the inputs are identical.
double psnr(const VideoTensor& a, const VideoTensor& b);

inline constexpr std::size_t kSsimWindow = 7;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Mean SSIM over every 7x7x7 uniform window position (valid placement, no
// padding). Along an axis shorter than 7 the window spans the whole axis.
// Window statistics use population (1/n) moments.
double ssim3d(const VideoTensor& a, const VideoTensor& b);

QualityReport quality_report(const VideoTensor& reference, const VideoTensor& reconstruction);

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0; // -infinity when the target is constant and the fit is not exact
};

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> target);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::optional<double> auroc; // empty when only one class is present
};

// Rank-statistic AUROC with midranks for ties. Throws UndefinedMetricError
// unless both classes occur.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Scores >= threshold count as positive predictions.
ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double threshold = 0.5);

} // namespace sinevid
