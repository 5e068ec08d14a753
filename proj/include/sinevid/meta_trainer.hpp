#pragma once

// Two-level optimization of the modulated sine network. For each sampled
// batch of frames the inner loop starts v and every phi_t at zero and takes
// G plain gradient steps of size gamma1:
//
//   phi_t <- phi_t - gamma1 * grad_{phi_t} L_t
//   v     <- v     - gamma1 * grad_v (1/b) sum_t L_t
//
// both from the same forward pass. The outer loop then takes one plain
// gradient step of size gamma2 on all shared parameters, evaluated at the
// adapted modulations (first-order: the inner steps are not differentiated).

#include "sinevid/siren.hpp"
#include "sinevid/video.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sinevid {

enum class Precision { f32, f64 };

struct TrainConfig {
    std::size_t layers = 10;        // K
    std::size_t hidden = 256;       // l
    std::size_t video_dim = 2048;   // s
    std::size_t frame_dim = 512;    // r
    std::size_t inner_steps = 10;   // G
    double inner_lr = 0.1;          // gamma1
    double meta_lr = 0.5e-6;        // gamma2
    std::size_t batch_frames = 0;   // b
    std::size_t coords_per_frame = 0; // N
    std::size_t iterations = 0;
    double omega0 = 30.0;
    std::uint64_t seed = 0;
    Precision precision = Precision::f32;
    std::size_t log_every = 100;    // progress-print interval; the log file keeps every iteration
    std::size_t checkpoint_every = 0; // 0: only at the end
    std::size_t validate_every = 0;   // 0: no validation PSNR

    ModelDims dims() const { return {layers, hidden, video_dim, frame_dim, omega0}; }
    // Throws ContractError naming the first offending field.
    void validate() const;
};

// Frames of one batch sharing a coordinate list: targets are [F x N].
template <class T>
struct FrameBatch {
    CoordinateSet<T> coords;
    Tensor<T> targets;

    std::size_t frames() const noexcept { return targets.rows(); }
};

// Gathers the given frames of `video` at `coords`.
template <class T>
FrameBatch<T> make_batch(const VideoTensor& video, std::span<const std::uint32_t> frame_indices,
                         CoordinateSet<T> coords);

struct AdaptOptions {
    std::size_t steps = 10;
    double lr = 0.1;
    bool evaluate_final = true;
};

template <class T>
struct Adaptation {
    VideoModulation<T> video;
    FrameModulations<T> frames;
    std::vector<T> frame_losses;       // per frame, at the returned modulations
    std::vector<double> loss_history;  // mean batch loss before each step
};

// Inner loop. With `frozen_video` set, v is held at that value and only the
// phi_t are optimized. Throws DivergenceError on a non-finite loss.
template <class T>
Adaptation<T> adapt_modulations(const MetaModel<T>& model, const FrameBatch<T>& batch, const AdaptOptions& opts,
                                const VideoModulation<T>* frozen_video = nullptr);

template <class T>
Adaptation<T> inner_adapt(const MetaModel<T>& model, const FrameBatch<T>& batch, const TrainConfig& cfg);

struct LogEntry {
    std::size_t iteration = 0;
    double loss = 0.0;                 // mean batch loss at the adapted modulations
    std::optional<double> validation_psnr;
    double seconds = 0.0;
    std::string video;
};

struct TrainLog {
    std::vector<LogEntry> entries;
};

// One line per entry: "iter=<n> loss=<%.9g> [psnr=<%.4f>] time_ms=<...> video=<name>"
void write_log_line(std::ostream& out, const LogEntry& e);

// Samples b frames (without replacement when T >= b) and N coordinates,
// adapts modulations, then updates every shared parameter in place.
template <class T>
LogEntry meta_step(MetaModel<T>& model, const VideoTensor& video, const TrainConfig& cfg, Rng& rng);

// Per-iteration generator: every random draw of iteration `it` comes from
// this stream, which makes training resumable at any iteration.
Rng iteration_rng(std::uint64_t seed, std::size_t iteration);

struct VideoSource {
    std::string name;
    std::function<VideoTensor()> load;
};

template <class T>
struct TrainState {
    MetaModel<T> model;
    std::size_t iteration = 0; // completed outer iterations
};

struct TrainHooks {
    // Called with the iteration count after every `checkpoint_every`
    // iterations and once at the end.
    std::function<void(std::size_t iteration)> checkpoint;
    std::function<void(const LogEntry&)> on_log;
    std::function<void(const std::string&)> warn;
    // Held-out clip for periodic validation PSNR.
    const VideoTensor* validation = nullptr;
};

// Runs outer iterations [state.iteration, cfg.iterations) over the dataset
// in a seeded shuffled order. Sources that fail to load are skipped with a
// warning; throws IoError when none load.
template <class T>
TrainLog train(TrainState<T>& state, const std::vector<VideoSource>& dataset, const TrainConfig& cfg,
               const TrainHooks& hooks = {});

template <class T>
MetaModel<T> train(const std::vector<VideoSource>& dataset, const TrainConfig& cfg, const TrainHooks& hooks = {});

} // namespace sinevid
