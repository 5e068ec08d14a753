#include "sinevid/meta_trainer.hpp"

#include "sinevid/errors.hpp"
#include "sinevid/kernels.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace sinevid {

using kernels::index_t;

void TrainConfig::validate() const
{
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1)
            throw ContractError(std::string("config: ") + name + " must be >= 1");
    };
    positive(layers, "layers");
    positive(hidden, "hidden");
    positive(video_dim, "video_dim");
    positive(frame_dim, "frame_dim");
    positive(batch_frames, "batch_frames");
    positive(coords_per_frame, "coords_per_frame");
    auto rate = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0)
            throw ContractError(std::string("config: ") + name + " must be finite and >= 0");
    };
    rate(inner_lr, "inner_lr");
    rate(meta_lr, "meta_lr");
    dims().validate();
}

template <class T>
FrameBatch<T> make_batch(const VideoTensor& video, std::span<const std::uint32_t> frame_indices,
                         CoordinateSet<T> coords)
{
    if (frame_indices.empty())
        throw ContractError("batch needs at least one frame");
    if (coords.height != video.height || coords.width != video.width)
        throw DimensionError("coordinate grid does not match the video frame size");
    const std::size_t n = coords.count();
    FrameBatch<T> batch{std::move(coords), Tensor<T>({frame_indices.size(), n})};
    for (std::size_t f = 0; f < frame_indices.size(); ++f) {
        if (frame_indices[f] >= video.frames)
            throw ContractError("frame index out of range");
        const auto frame = video.frame(frame_indices[f]);
        for (std::size_t i = 0; i < n; ++i)
            batch.targets.at(f, i) = static_cast<T>(frame[batch.coords.pixels[i]]);
    }
    return batch;
}

namespace {

template <class T>
std::vector<T> per_frame_losses(const Tensor<T>& pred, const Tensor<T>& targets)
{
    const std::size_t frames = targets.rows();
    const std::size_t n = targets.cols();
    std::vector<T> out(frames);
    for (std::size_t f = 0; f < frames; ++f)
        out[f] = kernels::squared_distance(static_cast<index_t>(n), pred.data() + f * n, targets.data() + f * n) /
                 static_cast<T>(n);
    return out;
}

} // namespace

template <class T>
Adaptation<T> adapt_modulations(const MetaModel<T>& model, const FrameBatch<T>& batch, const AdaptOptions& opts,
                                const VideoModulation<T>* frozen_video)
{
    const ModelDims& dims = model.dims;
    const std::size_t frames = batch.frames();
    if (frames == 0 || batch.coords.count() == 0)
        throw ContractError("inner loop: empty batch");
    if (frozen_video && frozen_video->dim() != dims.video_dim)
        throw DimensionError("frozen video modulation has length " + std::to_string(frozen_video->dim()) +
                             ", model expects " + std::to_string(dims.video_dim));

    Adaptation<T> out;
    out.video = frozen_video ? *frozen_video : VideoModulation<T>::zeros(dims.video_dim);
    out.frames = FrameModulations<T>::zeros(frames, dims.frame_dim);
    const bool learn_video = frozen_video == nullptr;
    const T lr = static_cast<T>(opts.lr);
    // The batch loss averages the per-frame losses, so its phi_t gradient is
    // grad L_t / F; rescale to step on L_t itself.
    const T frame_lr = lr * static_cast<T>(frames);

    try {
        for (std::size_t step = 0; step < opts.steps; ++step) {
            Tape<T> tape;
            const ModelVars params = bind_model(tape, model, false);
            const Var v = tape.leaf_ref(out.video.values, learn_video);
            const Var phi = tape.leaf_ref(out.frames.values, true);
            const Var pred = forward_graph(tape, dims, params, tape.leaf_ref(batch.coords.xy), v, phi);
            const Var loss = tape.mse(pred, tape.leaf_ref(batch.targets));
            out.loss_history.push_back(static_cast<double>(tape.value(loss).item()));
            tape.backward(loss);
            if (learn_video && lr != T(0)) {
                const Tensor<T> gv = tape.grad(v);
                gv.require_finite("video modulation gradient");
                kernels::axpy(static_cast<index_t>(gv.size()), -lr, gv.data(), out.video.values.data());
            }
            if (lr != T(0)) {
                const Tensor<T> gp = tape.grad(phi);
                gp.require_finite("frame modulation gradient");
                kernels::axpy(static_cast<index_t>(gp.size()), -frame_lr, gp.data(), out.frames.values.data());
            }
        }
        if (opts.evaluate_final) {
            const Tensor<T> pred = forward_frames(model, out.video, out.frames, batch.coords);
            out.frame_losses = per_frame_losses(pred, batch.targets);
            double mean = 0.0;
            for (T l : out.frame_losses)
                mean += static_cast<double>(l);
            mean /= static_cast<double>(frames);
            if (!std::isfinite(mean))
                throw NonFiniteError("final inner loss");
        }
    } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("inner loop diverged at step ") + std::to_string(out.loss_history.size()) +
                                  ": " + e.what(),
                              out.loss_history.size(), out.loss_history);
    }
    return out;
}

template <class T>
Adaptation<T> inner_adapt(const MetaModel<T>& model, const FrameBatch<T>& batch, const TrainConfig& cfg)
{
    if (model.dims != cfg.dims())
        throw DimensionError("model dims do not match the training config");
    return adapt_modulations(model, batch, AdaptOptions{cfg.inner_steps, cfg.inner_lr, true});
}

Rng iteration_rng(std::uint64_t seed, std::size_t iteration)
{
    return Rng({seed, key(Stream::frames), static_cast<std::uint64_t>(iteration)});
}

template <class T>
LogEntry meta_step(MetaModel<T>& model, const VideoTensor& video, const TrainConfig& cfg, Rng& rng)
{
    if (video.frames < 1)
        throw ContractError("meta_step: video has no frames");
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t b = cfg.batch_frames;
    std::vector<std::uint32_t> frames;
    if (video.frames >= b) {
        frames = rng.sample_without_replacement(static_cast<std::uint32_t>(video.frames), static_cast<std::uint32_t>(b));
    } else {
        for (std::size_t i = 0; i < b; ++i)
            frames.push_back(static_cast<std::uint32_t>(rng.index(video.frames)));
    }
    const std::size_t n = std::min(cfg.coords_per_frame, video.frame_size());
    FrameBatch<T> batch = make_batch(video, frames, sample_coords<T>(video.height, video.width, n, rng));

    const Adaptation<T> adapted =
        adapt_modulations(model, batch, AdaptOptions{cfg.inner_steps, cfg.inner_lr, false});

    Tape<T> tape;
    const ModelVars params = bind_model(tape, model, true);
    const Var pred = forward_graph(tape, model.dims, params, tape.leaf_ref(batch.coords.xy),
                                   tape.leaf_ref(adapted.video.values), tape.leaf_ref(adapted.frames.values));
    const Var loss = tape.mse(pred, tape.leaf_ref(batch.targets));
    LogEntry entry;
    entry.loss = static_cast<double>(tape.value(loss).item());
    if (!std::isfinite(entry.loss))
        throw DivergenceError("outer loss is not finite", adapted.loss_history.size(), adapted.loss_history);

    if (cfg.meta_lr != 0.0) {
        const std::vector<Var> leaves = params.all();
        std::vector<Tensor<T>> grads = tape.backward(loss, leaves);
        const T lr = static_cast<T>(cfg.meta_lr);
        auto targets = model.parameters();
        for (std::size_t p = 0; p < targets.size(); ++p) {
            grads[p].require_finite("meta gradient");
            kernels::axpy(static_cast<index_t>(grads[p].size()), -lr, grads[p].data(), targets[p]->data());
        }
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return entry;
}

void write_log_line(std::ostream& out, const LogEntry& e)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "iter=%zu loss=%.9g", e.iteration, e.loss);
    out << buf;
    if (e.validation_psnr) {
        std::snprintf(buf, sizeof buf, " psnr=%.4f", *e.validation_psnr);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " time_ms=%.3f", e.seconds * 1e3);
    out << buf;
    if (!e.video.empty())
        out << " video=" << e.video;
    out << '\n';
}

namespace {

template <class T>
double validation_psnr(const MetaModel<T>& model, const VideoTensor& video, const TrainConfig& cfg)
{
    const std::size_t frames = std::min(cfg.batch_frames, video.frames);
    std::vector<std::uint32_t> idx(frames);
    for (std::uint32_t i = 0; i < frames; ++i)
        idx[i] = i;
    const FrameBatch<T> batch =
        make_batch(video, idx, CoordinateSet<T>::full_grid(video.height, video.width));
    const Adaptation<T> a = adapt_modulations(model, batch, AdaptOptions{cfg.inner_steps, cfg.inner_lr, false});
    const Tensor<T> pred = forward_frames(model, a.video, a.frames, batch.coords);
    double se = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pred[i]), 0.0, 1.0);
        const double d = p - static_cast<double>(batch.targets[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(pred.size());
    return mse > 0.0 ? -10.0 * std::log10(mse) : std::numeric_limits<double>::infinity();
}

} // namespace

template <class T>
TrainLog train(TrainState<T>& state, const std::vector<VideoSource>& dataset, const TrainConfig& cfg,
               const TrainHooks& hooks)
{
    cfg.validate();
    state.model.check_consistent();
    if (state.model.dims != cfg.dims())
        throw DimensionError("model dims do not match the training config");

    TrainLog log;
    if (state.iteration >= cfg.iterations) {
        if (hooks.checkpoint)
            hooks.checkpoint(state.iteration);
        return log;
    }
    if (dataset.empty())
        throw ContractError("training dataset is empty");

    std::vector<VideoTensor> videos;
    std::vector<std::string> names;
    for (const auto& src : dataset) {
        try {
            VideoTensor v = src.load();
            v.validate();
            videos.push_back(std::move(v));
            names.push_back(src.name);
        } catch (const std::exception& e) {
            if (hooks.warn)
                hooks.warn("skipping " + src.name + ": " + e.what());
        }
    }
    if (videos.empty())
        throw IoError("none of the " + std::to_string(dataset.size()) + " training videos could be read");

    const std::size_t count = videos.size();
    std::vector<std::uint32_t> order;
    std::size_t order_epoch = ~std::size_t{0};
    bool checkpointed_last = false;
    for (std::size_t it = state.iteration; it < cfg.iterations; ++it) {
        const std::size_t epoch = it / count;
        if (epoch != order_epoch) {
            order = Rng({cfg.seed, key(Stream::shuffle), static_cast<std::uint64_t>(epoch)})
                        .permutation(static_cast<std::uint32_t>(count));
            order_epoch = epoch;
        }
        const std::size_t pick = order[it % count];
        Rng rng = iteration_rng(cfg.seed, it);
        LogEntry entry = meta_step(state.model, videos[pick], cfg, rng);
        entry.iteration = it + 1;
        entry.video = names[pick];
        state.iteration = it + 1;
        if (cfg.validate_every && hooks.validation && state.iteration % cfg.validate_every == 0)
            entry.validation_psnr = validation_psnr(state.model, *hooks.validation, cfg);
        log.entries.push_back(entry);
        if (hooks.on_log)
            hooks.on_log(entry);
        checkpointed_last = false;
        if (hooks.checkpoint && cfg.checkpoint_every && state.iteration % cfg.checkpoint_every == 0) {
            hooks.checkpoint(state.iteration);
            checkpointed_last = true;
        }
    }
    if (hooks.checkpoint && !checkpointed_last)
        hooks.checkpoint(state.iteration);
    return log;
}

template <class T>
MetaModel<T> train(const std::vector<VideoSource>& dataset, const TrainConfig& cfg, const TrainHooks& hooks)
{
    cfg.validate();
    TrainState<T> state{MetaModel<T>::initialize(cfg.dims(), cfg.seed), 0};
    train(state, dataset, cfg, hooks);
    return std::move(state.model);
}

#define SINEVID_INSTANTIATE(T)                                                                                 \
    template FrameBatch<T> make_batch<T>(const VideoTensor&, std::span<const std::uint32_t>, CoordinateSet<T>); \
    template Adaptation<T> adapt_modulations<T>(const MetaModel<T>&, const FrameBatch<T>&, const AdaptOptions&, \
                                                const VideoModulation<T>*);                                    \
    template Adaptation<T> inner_adapt<T>(const MetaModel<T>&, const FrameBatch<T>&, const TrainConfig&);      \
    template LogEntry meta_step<T>(MetaModel<T>&, const VideoTensor&, const TrainConfig&, Rng&);               \
    template TrainLog train<T>(TrainState<T>&, const std::vector<VideoSource>&, const TrainConfig&,            \
                               const TrainHooks&);                                                             \
    template MetaModel<T> train<T>(const std::vector<VideoSource>&, const TrainConfig&, const TrainHooks&);

SINEVID_INSTANTIATE(float)
SINEVID_INSTANTIATE(double)
#undef SINEVID_INSTANTIATE

} // namespace sinevid
