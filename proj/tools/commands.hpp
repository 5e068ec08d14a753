#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sinevid::cli {

// Exit codes: 0 success, 1 failed items or runtime error, 2 usage error.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::filesystem::path out;
    std::vector<std::string> arguments; // argv for the manifest
    std::size_t jobs = 1;
    bool continue_on_error = false;
    bool quiet = false;
};

// Inputs given either as paths or as a corpus manifest filtered by split.
struct InputArgs {
    std::vector<std::filesystem::path> paths;
    std::optional<std::filesystem::path> corpus;
    std::string split = "all"; // train | test | all
    std::size_t height = 0;    // 0: keep the source size
    std::size_t width = 0;
};

struct GenCorpusArgs {
    std::optional<std::filesystem::path> spec;
    std::size_t count = 20;
    std::uint64_t seed = 0;
};

struct TrainArgs {
    std::filesystem::path config;
    std::optional<std::filesystem::path> resume;
    std::optional<std::filesystem::path> validate;
};

// Encode options come from a config file, then individual flags.
struct EncodeFlags {
    std::optional<std::filesystem::path> config;
    std::optional<std::size_t> batch_frames;
    std::optional<std::size_t> inner_steps;
    std::optional<double> inner_lr;
};

struct EncodeArgs {
    std::filesystem::path model;
    EncodeFlags flags;
    bool report = false;
};

struct DecodeArgs {
    std::filesystem::path model;
    std::vector<std::filesystem::path> encodings;
    std::vector<std::filesystem::path> references;
    bool report = false;
    bool pgm = false;
};

struct SummaryArgs {
    std::filesystem::path model;
    std::vector<std::filesystem::path> encodings;
};

struct EvalArgs {
    std::filesystem::path model;
    EncodeFlags flags;
    std::string task = "regression";
    std::vector<std::string> modes{"v", "phi", "combined"};
    std::size_t seeds = 1;
    std::uint64_t seed = 0;
    std::size_t epochs = 300;
    std::vector<std::size_t> hidden{256, 64};
    double dropout = 0.2;
    double lr = 1e-3;
    std::size_t batch_size = 16;
    bool shuffle_labels = false;
};

struct GradcheckArgs {
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    double step = 1e-4;
    double tolerance = 1e-4;
};

int cmd_gen_corpus(const CommonArgs& common, const GenCorpusArgs& opts);
int cmd_train(const CommonArgs& common, const InputArgs& inputs, const TrainArgs& opts);
int cmd_encode(const CommonArgs& common, const InputArgs& inputs, const EncodeArgs& opts);
int cmd_decode(const CommonArgs& common, const DecodeArgs& opts);
int cmd_summary(const CommonArgs& common, const SummaryArgs& opts);
int cmd_eval(const CommonArgs& common, const InputArgs& inputs, const EvalArgs& opts);
int cmd_gradcheck(const CommonArgs& common, const GradcheckArgs& opts);

} // namespace sinevid::cli
