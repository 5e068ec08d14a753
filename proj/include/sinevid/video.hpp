#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sinevid {

// T x h x w grayscale clip, row-major per frame, values in [0, 1].
struct VideoTensor {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;

    VideoTensor() = default;
    VideoTensor(std::size_t t, std::size_t h, std::size_t w, float fill = 0.0f);
    VideoTensor(std::size_t t, std::size_t h, std::size_t w, std::vector<float> data);

    std::size_t frame_size() const noexcept { return height * width; }
    float& at(std::size_t t, std::size_t i, std::size_t j) { return values[(t * height + i) * width + j]; }
    float at(std::size_t t, std::size_t i, std::size_t j) const { return values[(t * height + i) * width + j]; }
    std::span<const float> frame(std::size_t t) const { return {values.data() + t * frame_size(), frame_size()}; }
    std::span<float> frame(std::size_t t) { return {values.data() + t * frame_size(), frame_size()}; }

    // Throws ContractError unless T,h,w >= 1 and every value is finite in [0, 1].
    void validate() const;
    bool same_dims(const VideoTensor& other) const noexcept
    {
        return frames == other.frames && height == other.height && width == other.width;
    }
    friend bool operator==(const VideoTensor&, const VideoTensor&) = default;
};

// .rawvid: "VRAW", then T, h, w as u32 LE, then T*h*w f32 LE.
VideoTensor load_rawvid(const std::filesystem::path& path);
void save_rawvid(const VideoTensor& video, const std::filesystem::path& path);

// Directory of binary 8-bit PGM (P5) frames in lexicographic order, scaled by 1/255.
VideoTensor load_pgm_dir(const std::filesystem::path& dir);
// Writes frame_0000.pgm ... rounding to the nearest 8-bit level.
void save_pgm_dir(const VideoTensor& video, const std::filesystem::path& dir);
void save_pgm(std::span<const float> frame, std::size_t h, std::size_t w, const std::filesystem::path& path);

// Dispatches on the path: directory -> PGM sequence, otherwise .rawvid.
VideoTensor load_video(const std::filesystem::path& path);

// Per-frame bilinear resampling with pixel-center alignment.
VideoTensor resize_video(const VideoTensor& video, std::size_t height, std::size_t width);

enum class SynthFamily { blob, sweep, speckle };
enum class Trajectory { linear, circular };

std::string to_string(SynthFamily f);
std::string to_string(Trajectory t);
SynthFamily parse_family(const std::string& s);
Trajectory parse_trajectory(const std::string& s);

// One synthetic clip: a smooth static background plus a moving Gaussian
// blob (or a vertical bar for `sweep`). `speckle` adds a fixed multiplicative
// grain to the background.
struct SynthSpec {
    SynthFamily family = SynthFamily::blob;
    std::uint64_t background_seed = 0;
    std::size_t frames = 8;
    std::size_t height = 32;
    std::size_t width = 32;
    double amplitude = 0.4;
    double speed = 2.0; // pixels per frame along the path
    double sigma = 3.0; // blob radius in pixels
    Trajectory trajectory = Trajectory::linear;
    double start_y = 0.5; // fraction of the frame height (linear paths)
};

struct SynthLabel {
    double speed = 0.0;     // regression target
    int trajectory_class = 0; // 0 linear, 1 circular
};

SynthLabel label_of(const SynthSpec& spec);

// Blob center at frame t in pixel coordinates (column, row).
std::pair<double, double> blob_center(const SynthSpec& spec, std::size_t t);

struct SynthVideo {
    VideoTensor video;
    SynthLabel label;
};

SynthVideo gen_synthetic(const SynthSpec& spec);

} // namespace sinevid
