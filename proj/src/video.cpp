#include "sinevid/video.hpp"

#include "sinevid/binary_io.hpp"
#include "sinevid/errors.hpp"
#include "sinevid/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sinevid {

namespace fs = std::filesystem;

VideoTensor::VideoTensor(std::size_t t, std::size_t h, std::size_t w, float fill)
    : frames(t), height(h), width(w), values(t * h * w, fill)
{
}

VideoTensor::VideoTensor(std::size_t t, std::size_t h, std::size_t w, std::vector<float> data)
    : frames(t), height(h), width(w), values(std::move(data))
{
    if (values.size() != t * h * w)
        throw DimensionError("video data length " + std::to_string(values.size()) + " does not match " +
                             std::to_string(t) + "x" + std::to_string(h) + "x" + std::to_string(w));
}

void VideoTensor::validate() const
{
    if (frames < 1 || height < 1 || width < 1)
        throw ContractError("video extents must be >= 1");
    if (values.size() != frames * height * width)
        throw DimensionError("video data length does not match its extents");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw ContractError("video value " + std::to_string(v) + " at element " + std::to_string(i) +
                                " is outside [0, 1]");
    }
}

VideoTensor load_rawvid(const fs::path& path)
{
    const Bytes data = read_file(path);
    ByteReader in(data);
    const auto magic = in.raw(4);
    if (std::string(magic.begin(), magic.end()) != "VRAW")
        throw BadMagicError(path.string() + ": not a .rawvid file (bad magic)");
    const std::size_t t = in.u32();
    const std::size_t h = in.u32();
    const std::size_t w = in.u32();
    if (t == 0 || h == 0 || w == 0)
        throw FormatError(path.string() + ": zero extent in header");
    if (in.remaining() != t * h * w * 4)
        throw TruncatedError(path.string() + ": payload holds " + std::to_string(in.remaining()) +
                             " bytes, header promises " + std::to_string(t * h * w * 4));
    VideoTensor video(t, h, w);
    in.f32s(video.values);
    video.validate();
    return video;
}

void save_rawvid(const VideoTensor& video, const fs::path& path)
{
    ByteWriter out;
    out.tag("VRAW");
    out.u32(static_cast<std::uint32_t>(video.frames));
    out.u32(static_cast<std::uint32_t>(video.height));
    out.u32(static_cast<std::uint32_t>(video.width));
    out.f32s(video.values);
    write_file_atomic(path, out.bytes());
}

namespace {

struct PgmImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;
};

PgmImage read_pgm(const fs::path& path)
{
    const Bytes data = read_file(path);
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n')
                    ++pos;
            } else if (std::isspace(data[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> std::size_t {
        skip_space();
        if (pos >= data.size() || !std::isdigit(data[pos]))
            throw FormatError(path.string() + ": malformed PGM header");
        std::size_t v = 0;
        while (pos < data.size() && std::isdigit(data[pos]))
            v = v * 10 + (data[pos++] - '0');
        return v;
    };
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
        throw BadMagicError(path.string() + ": not a binary PGM (P5) file");
    pos = 2;
    PgmImage img;
    img.width = read_int();
    img.height = read_int();
    const std::size_t maxval = read_int();
    if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255)
        throw FormatError(path.string() + ": unsupported PGM geometry or maxval");
    ++pos; // single whitespace byte after maxval
    const std::size_t n = img.width * img.height;
    if (data.size() < pos + n)
        throw TruncatedError(path.string() + ": PGM pixel data truncated");
    img.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        img.values[i] = static_cast<float>(data[pos + i]) / static_cast<float>(maxval);
    return img;
}

} // namespace

VideoTensor load_pgm_dir(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    if (files.empty())
        throw EmptyInputError(dir.string() + ": no .pgm frames found");
    std::sort(files.begin(), files.end());

    VideoTensor video;
    for (std::size_t t = 0; t < files.size(); ++t) {
        PgmImage img = read_pgm(files[t]);
        if (t == 0) {
            video = VideoTensor(files.size(), img.height, img.width);
        } else if (img.height != video.height || img.width != video.width) {
            throw InconsistentFramesError(files[t].string() + ": frame is " + std::to_string(img.width) + "x" +
                                          std::to_string(img.height) + ", first frame is " +
                                          std::to_string(video.width) + "x" + std::to_string(video.height));
        }
        std::copy(img.values.begin(), img.values.end(), video.frame(t).begin());
    }
    return video;
}

void save_pgm(std::span<const float> frame, std::size_t h, std::size_t w, const fs::path& path)
{
    ByteWriter out;
    const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.tag(header);
    for (float v : frame) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        out.raw(std::array<std::uint8_t, 1>{static_cast<std::uint8_t>(std::lround(c * 255.0f))});
    }
    write_file_atomic(path, out.bytes());
}

void save_pgm_dir(const VideoTensor& video, const fs::path& dir)
{
    fs::create_directories(dir);
    for (std::size_t t = 0; t < video.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.pgm", t);
        save_pgm(video.frame(t), video.height, video.width, dir / name);
    }
}

VideoTensor load_video(const fs::path& path)
{
    if (fs::is_directory(path))
        return load_pgm_dir(path);
    return load_rawvid(path);
}

VideoTensor resize_video(const VideoTensor& video, std::size_t height, std::size_t width)
{
    if (height < 1 || width < 1)
        throw ContractError("resize target must be at least 1x1");
    if (height == video.height && width == video.width)
        return video;

    struct Tap {
        std::size_t lo, hi;
        double frac;
    };
    auto taps = [](std::size_t out_n, std::size_t in_n) {
        std::vector<Tap> t(out_n);
        const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
        for (std::size_t i = 0; i < out_n; ++i) {
            double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
            const auto lo = static_cast<std::size_t>(std::floor(src));
            t[i] = {lo, std::min(lo + 1, in_n - 1), src - static_cast<double>(lo)};
        }
        return t;
    };
    const auto ty = taps(height, video.height);
    const auto tx = taps(width, video.width);

    VideoTensor out(video.frames, height, width);
    for (std::size_t t = 0; t < video.frames; ++t) {
        for (std::size_t i = 0; i < height; ++i) {
            for (std::size_t j = 0; j < width; ++j) {
                const auto& [y0, y1, fy] = ty[i];
                const auto& [x0, x1, fx] = tx[j];
                const double top = (1.0 - fx) * video.at(t, y0, x0) + fx * video.at(t, y0, x1);
                const double bot = (1.0 - fx) * video.at(t, y1, x0) + fx * video.at(t, y1, x1);
                out.at(t, i, j) = std::clamp(static_cast<float>((1.0 - fy) * top + fy * bot), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

std::string to_string(SynthFamily f)
{
    switch (f) {
    case SynthFamily::blob: return "blob";
    case SynthFamily::sweep: return "sweep";
    case SynthFamily::speckle: return "speckle";
    }
    return "?";
}

std::string to_string(Trajectory t)
{
    return t == Trajectory::linear ? "linear" : "circular";
}

SynthFamily parse_family(const std::string& s)
{
    if (s == "blob")
        return SynthFamily::blob;
    if (s == "sweep")
        return SynthFamily::sweep;
    if (s == "speckle")
        return SynthFamily::speckle;
    throw ConfigError("unknown synthetic family '" + s + "' (expected blob, sweep or speckle)");
}

Trajectory parse_trajectory(const std::string& s)
{
    if (s == "linear")
        return Trajectory::linear;
    if (s == "circular")
        return Trajectory::circular;
    throw ConfigError("unknown trajectory '" + s + "' (expected linear or circular)");
}

SynthLabel label_of(const SynthSpec& spec)
{
    return {spec.speed, spec.trajectory == Trajectory::circular ? 1 : 0};
}

std::pair<double, double> blob_center(const SynthSpec& spec, std::size_t t)
{
    const double w = static_cast<double>(spec.width - 1);
    const double h = static_cast<double>(spec.height - 1);
    const double tt = static_cast<double>(t);
    if (spec.trajectory == Trajectory::linear)
        return {0.15 * w + spec.speed * tt, spec.start_y * h};
    const double radius = 0.25 * std::min(w, h);
    const double angle = radius > 0.0 ? spec.speed * tt / radius : 0.0;
    return {0.5 * w + radius * std::cos(angle), 0.5 * h + radius * std::sin(angle)};
}

SynthVideo gen_synthetic(const SynthSpec& spec)
{
    if (spec.frames < 1 || spec.height < 1 || spec.width < 1)
        throw ContractError("synthetic video extents must be >= 1");
    const std::size_t h = spec.height;
    const std::size_t w = spec.width;

    Rng rng({spec.background_seed, key(Stream::synth)});
    std::vector<double> bg(h * w, 0.0);
    for (int c = 0; c < 4; ++c) {
        const double fx = rng.uniform(0.5, 2.5);
        const double fy = rng.uniform(0.5, 2.5);
        const double px = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double py = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.3, 1.0);
        for (std::size_t i = 0; i < h; ++i) {
            const double y = h > 1 ? static_cast<double>(i) / static_cast<double>(h - 1) : 0.0;
            for (std::size_t j = 0; j < w; ++j) {
                const double x = w > 1 ? static_cast<double>(j) / static_cast<double>(w - 1) : 0.0;
                bg[i * w + j] += amp * std::cos(2.0 * std::numbers::pi * fx * x + px) *
                                 std::cos(2.0 * std::numbers::pi * fy * y + py);
            }
        }
    }
    const auto [lo, hi] = std::minmax_element(bg.begin(), bg.end());
    const double span = *hi - *lo;
    const double low = *lo;
    for (auto& v : bg)
        v = 0.15 + 0.5 * (span > 0.0 ? (v - low) / span : 0.5);
    if (spec.family == SynthFamily::speckle)
        for (auto& v : bg)
            v *= 1.0 + 0.2 * rng.normal();

    SynthVideo out{VideoTensor(spec.frames, h, w), label_of(spec)};
    const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        const auto [cx, cy] = blob_center(spec, t);
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                const double dx = static_cast<double>(j) - cx;
                const double dy = static_cast<double>(i) - cy;
                const double d2 = spec.family == SynthFamily::sweep ? dx * dx : dx * dx + dy * dy;
                const double v = bg[i * w + j] + spec.amplitude * std::exp(-d2 * inv2s2);
                out.video.at(t, i, j) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

} // namespace sinevid
