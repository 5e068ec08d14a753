#pragma once

// Task heads on modulation vectors. Features are v, the temporal mean of the
// phi_t, or both concatenated; a small ReLU MLP with dropout maps standardized
// features to a regression value or a binary logit.

#include "sinevid/binary_io.hpp"
#include "sinevid/codec.hpp"
#include "sinevid/metrics.hpp"
#include "sinevid/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sinevid {

enum class FeatureMode : std::uint32_t { video = 1, frames = 2, combined = 3 };
enum class HeadTask : std::uint32_t { regression = 1, binary = 2 };

std::string to_string(FeatureMode m);
std::string to_string(HeadTask t);
FeatureMode parse_feature_mode(const std::string& s); // "v", "phi", "combined"
HeadTask parse_head_task(const std::string& s);       // "regression", "binary"

struct HeadConfig {
    FeatureMode mode = FeatureMode::frames;
    std::vector<std::size_t> hidden{256, 64};
    double dropout = 0.2;
    HeadTask task = HeadTask::regression;
    std::size_t epochs = 300;
    std::size_t batch_size = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

// v, mean_t phi_t, or [v | mean_t phi_t].
std::vector<double> extract_features(const VideoEncoding<float>& enc, FeatureMode mode);

struct Head {
    FeatureMode mode = FeatureMode::frames;
    HeadTask task = HeadTask::regression;
    std::vector<Tensor<float>> weights; // [out x in] per layer, last has one row
    std::vector<Tensor<float>> biases;  // [1 x out]
    std::vector<float> feature_mean;
    std::vector<float> feature_scale;
    float target_mean = 0.0f; // regression targets are fitted standardized
    float target_scale = 1.0f;

    std::size_t input_dim() const { return feature_mean.size(); }
    // Regression values, or probabilities for the binary task. Dropout is
    // never applied here.
    std::vector<double> predict(const std::vector<std::vector<double>>& features) const;
};

struct HeadTraining {
    Head head;
    std::vector<double> epoch_loss; // mean minibatch loss per epoch
};

// Minibatch training with Adam; squared error for regression, logistic loss
// for binary labels (0/1). Deterministic per cfg.seed. Throws
// DivergenceError on a non-finite loss.
HeadTraining train_head(const std::vector<std::vector<double>>& features, const std::vector<double>& labels,
                        const HeadConfig& cfg);

struct HeadReport {
    HeadTask task = HeadTask::regression;
    RegressionMetrics regression;
    ClassificationMetrics classification;
};

// Binary reports carry an empty auroc when only one class is present; use
// auroc() directly for the throwing form.
HeadReport evaluate_head(const Head& head, const std::vector<std::vector<double>>& features,
                         const std::vector<double>& labels);

Bytes serialize_head(const Head& head);
Head deserialize_head(std::span<const std::uint8_t> file);
void save_head(const std::filesystem::path& path, const Head& head);
Head load_head(const std::filesystem::path& path);

} // namespace sinevid
