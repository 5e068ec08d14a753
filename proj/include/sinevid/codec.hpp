#pragma once

// Autoregressive video coding with a trained MetaModel.
//
// Encoding walks the clip in consecutive batches of b frames. The first
// batch optimizes v together with its phi_t; v is then frozen and every later
// batch only optimizes its own zero-initialized phi_t. Decoding evaluates the
// network on the full pixel grid for every frame and clamps to [0, 1].
//
// Files:
//   container := magic[4] u32 version u64 payload_len payload u64 fnv1a64(payload)
//   .snet     := container "SNET", payload = u32 kind, then kind body
//   .venc     := container "VENC"
// All integers and reals little-endian; reals IEEE-754 binary32.

#include "sinevid/binary_io.hpp"
#include "sinevid/meta_trainer.hpp"
#include "sinevid/siren.hpp"
#include "sinevid/video.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>

namespace sinevid {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class ContainerKind : std::uint32_t { meta_model = 1, downstream_head = 2 };

Bytes wrap_container(std::string_view magic, std::span<const std::uint8_t> payload);
// Verifies magic, version, length and checksum; returns the payload.
// Each failure raises its own FormatError subtype.
Bytes unwrap_container(std::string_view magic, std::span<const std::uint8_t> file, const std::string& what);

struct EncodeOptions {
    std::size_t batch_frames = 1; // b
    std::size_t inner_steps = 10; // G
    double inner_lr = 0.1;        // gamma1

    static EncodeOptions from(const TrainConfig& cfg) { return {cfg.batch_frames, cfg.inner_steps, cfg.inner_lr}; }
};

template <class T>
struct VideoEncoding {
    VideoModulation<T> video;
    FrameModulations<T> frames;
    std::size_t source_frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::uint64_t model_fingerprint = 0;
    EncodeOptions options;

    friend bool operator==(const VideoEncoding& a, const VideoEncoding& b)
    {
        return same_bits(a.video.values, b.video.values) && same_bits(a.frames.values, b.frames.values) &&
               a.source_frames == b.source_frames && a.height == b.height && a.width == b.width &&
               a.model_fingerprint == b.model_fingerprint && a.options.batch_frames == b.options.batch_frames &&
               a.options.inner_steps == b.options.inner_steps && a.options.inner_lr == b.options.inner_lr;
    }
};

// Content hash of the model's serialized dims and parameters.
template <class T>
std::uint64_t model_fingerprint(const MetaModel<T>& model);

// Observer for each encoded batch: (batch index, v after the batch, phis of
// the batch).
template <class T>
using BatchObserver =
    std::function<void(std::size_t, const VideoModulation<T>&, const FrameModulations<T>&)>;

template <class T>
VideoEncoding<T> encode_video(const MetaModel<T>& model, const VideoTensor& video, const EncodeOptions& opts,
                              const BatchObserver<T>& observer = {});

// Throws FingerprintError when `enc` was produced by a different model.
template <class T>
VideoTensor decode_video(const MetaModel<T>& model, const VideoEncoding<T>& enc);

// Frames [first, first + count) only; concatenating ranges equals decode_video.
template <class T>
VideoTensor decode_frames(const MetaModel<T>& model, const VideoEncoding<T>& enc, std::size_t first,
                          std::size_t count);

// One frame rendered with phi = 0: the clip-level summary held by v.
template <class T>
VideoTensor decode_static_summary(const MetaModel<T>& model, const VideoEncoding<T>& enc);

// (T*h*w) / (s + T*r)
double compression_rate(std::size_t frames, std::size_t height, std::size_t width, std::size_t s, std::size_t r);

template <class T>
struct Checkpoint {
    MetaModel<T> model;
    std::uint64_t iteration = 0;
};

template <class T>
Bytes serialize_model(const MetaModel<T>& model, std::uint64_t iteration = 0);
Checkpoint<float> deserialize_model(std::span<const std::uint8_t> file);

template <class T>
void save_model(const std::filesystem::path& path, const MetaModel<T>& model, std::uint64_t iteration = 0);
Checkpoint<float> load_model(const std::filesystem::path& path);

template <class T>
Bytes serialize_encoding(const VideoEncoding<T>& enc);
VideoEncoding<float> deserialize_encoding(std::span<const std::uint8_t> file);

template <class T>
void save_encoding(const std::filesystem::path& path, const VideoEncoding<T>& enc);
VideoEncoding<float> load_encoding(const std::filesystem::path& path);

} // namespace sinevid
