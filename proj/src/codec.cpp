#include "sinevid/codec.hpp"

#include "sinevid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sinevid {

Bytes wrap_container(std::string_view magic, std::span<const std::uint8_t> payload)
{
    ByteWriter out;
    out.tag(magic);
    out.u32(kFormatVersion);
    out.u64(payload.size());
    out.raw(payload);
    out.u64(fnv1a64(payload));
    return out.take();
}

Bytes unwrap_container(std::string_view magic, std::span<const std::uint8_t> file, const std::string& what)
{
    ByteReader in(file);
    if (file.size() < 4 + 4 + 8 + 8)
        throw TruncatedError(what + ": file too short for a header (" + std::to_string(file.size()) + " bytes)");
    const auto m = in.raw(4);
    if (std::string_view(reinterpret_cast<const char*>(m.data()), 4) != magic)
        throw BadMagicError(what + ": bad magic, expected " + std::string(magic));
    const std::uint32_t version = in.u32();
    if (version != kFormatVersion)
        throw VersionError(what + ": unsupported format version " + std::to_string(version));
    const std::uint64_t length = in.u64();
    if (length > in.remaining() || in.remaining() - length < 8)
        throw TruncatedError(what + ": payload of " + std::to_string(length) + " bytes declared, " +
                             std::to_string(in.remaining()) + " bytes follow the header");
    const auto payload = in.raw(length);
    const std::uint64_t stored = in.u64();
    if (in.remaining() != 0)
        throw FormatError(what + ": " + std::to_string(in.remaining()) + " trailing bytes after checksum");
    const std::uint64_t actual = fnv1a64(payload);
    if (stored != actual)
        throw ChecksumError(what + ": checksum mismatch (stored " + hex64(stored) + ", computed " + hex64(actual) +
                            ")");
    return Bytes(payload.begin(), payload.end());
}

namespace {

template <class T>
void put_tensor(ByteWriter& out, const Tensor<T>& t)
{
    out.u32(static_cast<std::uint32_t>(t.rows()));
    out.u32(static_cast<std::uint32_t>(t.cols()));
    if constexpr (std::is_same_v<T, float>) {
        out.f32s(t.values());
    } else {
        for (T v : t.values())
            out.f32(static_cast<float>(v));
    }
}

template <class T>
void write_model_body(ByteWriter& out, const MetaModel<T>& model)
{
    const ModelDims& d = model.dims;
    out.u32(static_cast<std::uint32_t>(d.layers));
    out.u32(static_cast<std::uint32_t>(d.hidden));
    out.u32(static_cast<std::uint32_t>(d.video_dim));
    out.u32(static_cast<std::uint32_t>(d.frame_dim));
    out.f32(static_cast<float>(d.omega0));
    const auto params = model.parameters();
    out.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params)
        put_tensor(out, *p);
}

} // namespace

template <class T>
std::uint64_t model_fingerprint(const MetaModel<T>& model)
{
    ByteWriter out;
    write_model_body(out, model);
    return fnv1a64(out.bytes());
}

template <class T>
Bytes serialize_model(const MetaModel<T>& model, std::uint64_t iteration)
{
    model.check_consistent();
    ByteWriter body;
    body.u32(static_cast<std::uint32_t>(ContainerKind::meta_model));
    write_model_body(body, model);
    body.u64(iteration);
    return wrap_container("SNET", body.bytes());
}

Checkpoint<float> deserialize_model(std::span<const std::uint8_t> file)
{
    const Bytes payload = unwrap_container("SNET", file, "model checkpoint");
    ByteReader in(payload);
    const auto kind = in.u32();
    if (kind != static_cast<std::uint32_t>(ContainerKind::meta_model))
        throw FormatError("model checkpoint: container holds kind " + std::to_string(kind) + ", not a meta model");
    ModelDims dims;
    dims.layers = in.u32();
    dims.hidden = in.u32();
    dims.video_dim = in.u32();
    dims.frame_dim = in.u32();
    dims.omega0 = in.f32();
    try {
        dims.validate();
    } catch (const ContractError& e) {
        throw FormatError(std::string("model checkpoint: ") + e.what());
    }
    Checkpoint<float> ck{MetaModel<float>::zeros(dims), 0};
    auto params = ck.model.parameters();
    const auto count = in.u32();
    if (count != params.size())
        throw FormatError("model checkpoint: " + std::to_string(count) + " parameter blobs, expected " +
                          std::to_string(params.size()));
    for (auto* p : params) {
        const std::size_t rows = in.u32();
        const std::size_t cols = in.u32();
        if (rows != p->rows() || cols != p->cols())
            throw FormatError("model checkpoint: parameter blob is " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", expected " + shape_string(p->shape()));
        in.f32s(p->values());
    }
    ck.iteration = in.u64();
    if (in.remaining() != 0)
        throw FormatError("model checkpoint: trailing payload bytes");
    for (const auto* p : params)
        if (!p->all_finite())
            throw FormatError("model checkpoint: non-finite parameter value");
    return ck;
}

template <class T>
void save_model(const std::filesystem::path& path, const MetaModel<T>& model, std::uint64_t iteration)
{
    write_file_atomic(path, serialize_model(model, iteration));
}

Checkpoint<float> load_model(const std::filesystem::path& path)
{
    return deserialize_model(read_file(path));
}

template <class T>
Bytes serialize_encoding(const VideoEncoding<T>& enc)
{
    ByteWriter body;
    body.u32(static_cast<std::uint32_t>(enc.source_frames));
    body.u32(static_cast<std::uint32_t>(enc.height));
    body.u32(static_cast<std::uint32_t>(enc.width));
    body.u32(static_cast<std::uint32_t>(enc.video.dim()));
    body.u32(static_cast<std::uint32_t>(enc.frames.dim()));
    body.u32(static_cast<std::uint32_t>(enc.options.inner_steps));
    body.f32(static_cast<float>(enc.options.inner_lr));
    body.u32(static_cast<std::uint32_t>(enc.options.batch_frames));
    body.u64(enc.model_fingerprint);
    for (T v : enc.video.values.values())
        body.f32(static_cast<float>(v));
    for (T v : enc.frames.values.values())
        body.f32(static_cast<float>(v));
    return wrap_container("VENC", body.bytes());
}

VideoEncoding<float> deserialize_encoding(std::span<const std::uint8_t> file)
{
    const Bytes payload = unwrap_container("VENC", file, "video encoding");
    ByteReader in(payload);
    VideoEncoding<float> enc;
    enc.source_frames = in.u32();
    enc.height = in.u32();
    enc.width = in.u32();
    const std::size_t s = in.u32();
    const std::size_t r = in.u32();
    enc.options.inner_steps = in.u32();
    enc.options.inner_lr = in.f32();
    enc.options.batch_frames = in.u32();
    enc.model_fingerprint = in.u64();
    if (enc.source_frames == 0 || enc.height == 0 || enc.width == 0 || s == 0 || r == 0)
        throw FormatError("video encoding: zero extent in header");
    if (in.remaining() != 4 * (s + enc.source_frames * r))
        throw FormatError("video encoding: payload size does not match T, s and r");
    enc.video = VideoModulation<float>::zeros(s);
    in.f32s(enc.video.values.values());
    enc.frames = FrameModulations<float>::zeros(enc.source_frames, r);
    in.f32s(enc.frames.values.values());
    if (!enc.video.values.all_finite() || !enc.frames.values.all_finite())
        throw FormatError("video encoding: non-finite modulation value");
    return enc;
}

template <class T>
void save_encoding(const std::filesystem::path& path, const VideoEncoding<T>& enc)
{
    write_file_atomic(path, serialize_encoding(enc));
}

VideoEncoding<float> load_encoding(const std::filesystem::path& path)
{
    return deserialize_encoding(read_file(path));
}

template <class T>
VideoEncoding<T> encode_video(const MetaModel<T>& model, const VideoTensor& video, const EncodeOptions& opts,
                              const BatchObserver<T>& observer)
{
    video.validate();
    model.check_consistent();
    if (opts.batch_frames < 1)
        throw ContractError("encode: batch_frames must be >= 1");

    VideoEncoding<T> enc;
    enc.source_frames = video.frames;
    enc.height = video.height;
    enc.width = video.width;
    enc.model_fingerprint = model_fingerprint(model);
    enc.options = opts;
    enc.frames = FrameModulations<T>::zeros(video.frames, model.dims.frame_dim);

    const auto grid = CoordinateSet<T>::full_grid(video.height, video.width);
    const AdaptOptions adapt{opts.inner_steps, opts.inner_lr, false};
    const std::size_t r = model.dims.frame_dim;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < video.frames; first += opts.batch_frames, ++batch_index) {
        const std::size_t count = std::min(opts.batch_frames, video.frames - first);
        std::vector<std::uint32_t> idx(count);
        for (std::size_t i = 0; i < count; ++i)
            idx[i] = static_cast<std::uint32_t>(first + i);
        const FrameBatch<T> batch = make_batch(video, idx, grid);
        Adaptation<T> a;
        try {
            a = batch_index == 0 ? adapt_modulations(model, batch, adapt)
                                 : adapt_modulations(model, batch, adapt, &enc.video);
        } catch (const DivergenceError& e) {
            throw DivergenceError("encode: batch " + std::to_string(batch_index) + ": " + e.what(), e.step(),
                                  e.loss_history());
        }
        if (batch_index == 0)
            enc.video = a.video;
        std::copy(a.frames.values.data(), a.frames.values.data() + count * r, enc.frames.values.data() + first * r);
        if (observer)
            observer(batch_index, enc.video, a.frames);
    }
    return enc;
}

namespace {

template <class T>
void check_fingerprint(const MetaModel<T>& model, const VideoEncoding<T>& enc)
{
    const std::uint64_t fp = model_fingerprint(model);
    if (fp != enc.model_fingerprint)
        throw FingerprintError("encoding was made with model " + hex64(enc.model_fingerprint) +
                               " but decode was given model " + hex64(fp));
    if (enc.video.dim() != model.dims.video_dim || enc.frames.dim() != model.dims.frame_dim)
        throw DimensionError("encoding modulation sizes do not match the model");
}

template <class T>
void write_clamped(const Tensor<T>& pred, std::span<float> dst)
{
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = static_cast<float>(std::clamp(pred[i], T(0), T(1)));
}

} // namespace

template <class T>
VideoTensor decode_frames(const MetaModel<T>& model, const VideoEncoding<T>& enc, std::size_t first,
                          std::size_t count)
{
    check_fingerprint(model, enc);
    if (first + count > enc.frames.frames() || count == 0)
        throw ContractError("decode: frame range out of bounds");
    const auto grid = CoordinateSet<T>::full_grid(enc.height, enc.width);
    VideoTensor out(count, enc.height, enc.width);
    for (std::size_t t = 0; t < count; ++t) {
        const Tensor<T> pred = forward_frame(model, enc.video, enc.frames.row(first + t), grid);
        write_clamped(pred, out.frame(t));
    }
    return out;
}

template <class T>
VideoTensor decode_video(const MetaModel<T>& model, const VideoEncoding<T>& enc)
{
    return decode_frames(model, enc, 0, enc.frames.frames());
}

template <class T>
VideoTensor decode_static_summary(const MetaModel<T>& model, const VideoEncoding<T>& enc)
{
    check_fingerprint(model, enc);
    const auto grid = CoordinateSet<T>::full_grid(enc.height, enc.width);
    const Tensor<T> pred = forward_frame(model, enc.video, Tensor<T>({1, model.dims.frame_dim}), grid);
    VideoTensor out(1, enc.height, enc.width);
    write_clamped(pred, out.frame(0));
    return out;
}

double compression_rate(std::size_t frames, std::size_t height, std::size_t width, std::size_t s, std::size_t r)
{
    const double raw = static_cast<double>(frames) * static_cast<double>(height) * static_cast<double>(width);
    return raw / (static_cast<double>(s) + static_cast<double>(frames) * static_cast<double>(r));
}

#define SINEVID_INSTANTIATE(T)                                                                              \
    template std::uint64_t model_fingerprint<T>(const MetaModel<T>&);                                       \
    template Bytes serialize_model<T>(const MetaModel<T>&, std::uint64_t);                                  \
    template void save_model<T>(const std::filesystem::path&, const MetaModel<T>&, std::uint64_t);          \
    template Bytes serialize_encoding<T>(const VideoEncoding<T>&);                                          \
    template void save_encoding<T>(const std::filesystem::path&, const VideoEncoding<T>&);                  \
    template VideoEncoding<T> encode_video<T>(const MetaModel<T>&, const VideoTensor&, const EncodeOptions&, \
                                              const BatchObserver<T>&);                                     \
    template VideoTensor decode_video<T>(const MetaModel<T>&, const VideoEncoding<T>&);                     \
    template VideoTensor decode_frames<T>(const MetaModel<T>&, const VideoEncoding<T>&, std::size_t,        \
                                          std::size_t);                                                     \
    template VideoTensor decode_static_summary<T>(const MetaModel<T>&, const VideoEncoding<T>&);

SINEVID_INSTANTIATE(float)
SINEVID_INSTANTIATE(double)
#undef SINEVID_INSTANTIATE

} // namespace sinevid
