#include "doctest.h"

#include "sinevid/codec.hpp"
#include "sinevid/errors.hpp"

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

using namespace sinevid;
namespace fs = std::filesystem;

namespace {

const ModelDims kDims{3, 16, 12, 6, 30.0};

VideoTensor clip(std::size_t frames, std::uint64_t seed = 1)
{
    SynthSpec spec;
    spec.background_seed = seed;
    spec.frames = frames;
    spec.height = 10;
    spec.width = 12;
    spec.sigma = 2.0;
    spec.speed = 1.0;
    return gen_synthetic(spec).video;
}

EncodeOptions options(std::size_t b) { return {b, 4, 0.1}; }

// Removed when the test process exits.
fs::path temp_dir()
{
    static const struct Dir {
        fs::path path = fs::temp_directory_path() / ("sinevid_codec_test_" + std::to_string(::getpid()));
        Dir() { fs::create_directories(path); }
        ~Dir() { fs::remove_all(path); }
    } dir;
    return dir.path;
}

} // namespace

TEST_SUITE("codec") {

TEST_CASE("compression rate examples")
{
    CHECK(std::abs(compression_rate(100, 112, 112, 2048, 512) - 23.56) < 0.01);
    CHECK(compression_rate(100, 112, 112, 2048, 512) == doctest::Approx(1254400.0 / 53248.0));
    CHECK(std::abs(compression_rate(100000000, 112, 112, 2048, 512) - 24.5) < 1e-3);
    CHECK(compression_rate(7, 4, 4, 0, 16) == 1.0);
}

TEST_CASE("single batch encoding equals the inner loop output")
{
    const auto model = MetaModel<float>::initialize(kDims, 1);
    const VideoTensor v = clip(3);
    const auto enc = encode_video(model, v, options(4));
    const std::uint32_t idx[] = {0, 1, 2};
    const auto a = adapt_modulations(model, make_batch(v, idx, CoordinateSet<float>::full_grid(10, 12)),
                                     AdaptOptions{4, 0.1, false});
    CHECK(same_bits(enc.video.values, a.video.values));
    CHECK(same_bits(enc.frames.values, a.frames.values));
    CHECK(enc.source_frames == 3);
}

TEST_CASE("encoding is deterministic")
{
    const auto model = MetaModel<float>::initialize(kDims, 2);
    const VideoTensor v = clip(7);
    CHECK(encode_video(model, v, options(3)) == encode_video(model, v, options(3)));
}

TEST_CASE("v is learned in the first batch and frozen afterwards")
{
    const auto model = MetaModel<float>::initialize(kDims, 3);
    const std::size_t b = 2;
    for (std::size_t T : {3, 6, 7}) {
        std::vector<Tensor<float>> seen;
        const auto enc = encode_video<float>(model, clip(T), options(b),
                                             [&](std::size_t, const VideoModulation<float>& v,
                                                 const FrameModulations<float>&) { seen.push_back(v.values); });
        REQUIRE(seen.size() == (T + b - 1) / b);
        for (const auto& v : seen)
            CHECK(same_bits(v, seen.front()));
        CHECK(same_bits(enc.video.values, seen.front()));
    }
}

TEST_CASE("later batches start their phi from zero")
{
    // With the same v, a later batch's phi equal a fresh frozen-v adaptation
    // of those frames.
    const auto model = MetaModel<float>::initialize(kDims, 4);
    const VideoTensor v = clip(5);
    const auto enc = encode_video(model, v, options(2));
    const std::uint32_t idx[] = {2, 3};
    const auto a = adapt_modulations(model, make_batch(v, idx, CoordinateSet<float>::full_grid(10, 12)),
                                     AdaptOptions{4, 0.1, false}, &enc.video);
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(enc.frames.values.at(2, j) == a.frames.values.at(0, j));
        CHECK(enc.frames.values.at(3, j) == a.frames.values.at(1, j));
    }
}

TEST_CASE("decode: shape, clamping, batch concatenation")
{
    const auto model = MetaModel<float>::initialize(kDims, 5);
    const VideoTensor v = clip(5);
    const auto enc = encode_video(model, v, options(2));
    const VideoTensor out = decode_video(model, enc);
    CHECK(out.same_dims(v));
    for (float x : out.values)
        CHECK((x >= 0.0f && x <= 1.0f));
    VideoTensor joined(0, 10, 12);
    for (std::size_t first = 0; first < 5; first += 2) {
        const VideoTensor part = decode_frames(model, enc, first, std::min<std::size_t>(2, 5 - first));
        joined.values.insert(joined.values.end(), part.values.begin(), part.values.end());
        joined.frames += part.frames;
    }
    CHECK(joined == out);
}

TEST_CASE("zero frame modulations decode to identical frames")
{
    const auto model = MetaModel<float>::initialize(kDims, 6);
    auto enc = encode_video(model, clip(4), options(2));
    enc.frames.values.fill(0.0f);
    const VideoTensor out = decode_video(model, enc);
    for (std::size_t t = 1; t < 4; ++t)
        for (std::size_t i = 0; i < out.frame_size(); ++i)
            REQUIRE(out.frame(t)[i] == out.frame(0)[i]);
    const VideoTensor summary = decode_static_summary(model, enc);
    CHECK(summary.frames == 1);
    for (std::size_t i = 0; i < out.frame_size(); ++i)
        CHECK(summary.frame(0)[i] == out.frame(0)[i]);
}

TEST_CASE("static summary does not depend on the clip length")
{
    const auto model = MetaModel<float>::initialize(kDims, 7);
    const VideoTensor v = clip(6);
    const auto full = encode_video(model, v, options(2));
    VideoTensor shorter(2, v.height, v.width);
    std::copy(v.values.begin(), v.values.begin() + 2 * v.frame_size(), shorter.values.begin());
    const auto truncated = encode_video(model, shorter, options(2));
    CHECK(same_bits(full.video.values, truncated.video.values));
    CHECK(decode_static_summary(model, full) == decode_static_summary(model, truncated));
}

TEST_CASE("fingerprint mismatch names both hashes")
{
    const auto a = MetaModel<float>::initialize(kDims, 8);
    const auto b = MetaModel<float>::initialize(kDims, 9);
    const auto enc = encode_video(a, clip(2), options(2));
    try {
        decode_video(b, enc);
        FAIL("expected FingerprintError");
    } catch (const FingerprintError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(hex64(model_fingerprint(a))) != std::string::npos);
        CHECK(msg.find(hex64(model_fingerprint(b))) != std::string::npos);
    }
    CHECK_THROWS_AS(decode_static_summary(b, enc), FingerprintError);
    CHECK(model_fingerprint(a) == model_fingerprint(a.cast<double>()));
}

TEST_CASE("model and encoding round trips are bit-exact")
{
    const auto model = MetaModel<float>::initialize(kDims, 10);
    const Bytes m1 = serialize_model(model, 42);
    const Checkpoint<float> back = deserialize_model(m1);
    CHECK(back.iteration == 42);
    CHECK(back.model.dims == model.dims);
    const auto pa = model.parameters(), pb = back.model.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(same_bits(*pa[i], *pb[i]));
    CHECK(serialize_model(back.model, back.iteration) == m1);

    const auto enc = encode_video(model, clip(5), options(2));
    const Bytes e1 = serialize_encoding(enc);
    const VideoEncoding<float> eback = deserialize_encoding(e1);
    CHECK(same_bits(eback.video.values, enc.video.values));
    CHECK(same_bits(eback.frames.values, enc.frames.values));
    CHECK(eback.model_fingerprint == enc.model_fingerprint);
    CHECK(serialize_encoding(eback) == e1);

    const fs::path dir = temp_dir();
    save_model(dir / "m.snet", model, 42);
    save_encoding(dir / "e.venc", enc);
    CHECK(read_file(dir / "m.snet") == m1);
    CHECK(serialize_encoding(load_encoding(dir / "e.venc")) == e1);
    CHECK(serialize_model(load_model(dir / "m.snet").model, 42) == m1);
}

TEST_CASE("encoding size is payload plus a small header")
{
    const ModelDims dims{2, 8, 32, 16, 30.0};
    const auto model = MetaModel<float>::initialize(dims, 11);
    const auto enc = encode_video(model, clip(16), EncodeOptions{8, 1, 0.1});
    const std::size_t size = serialize_encoding(enc).size();
    const std::size_t payload = 4 * (32 + 16 * 16);
    CHECK(size > payload);
    CHECK(size - payload < 1024);
}

TEST_CASE("corruption is reported as distinct format errors")
{
    const auto model = MetaModel<float>::initialize(kDims, 12);
    const Bytes good = serialize_model(model);

    Bytes b = good;
    b[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(b), BadMagicError);
    b = good;
    b[4] = 9;
    CHECK_THROWS_AS(deserialize_model(b), VersionError);
    b = good;
    b.resize(b.size() - 3);
    CHECK_THROWS_AS(deserialize_model(b), TruncatedError);
    b = good;
    b.resize(10);
    CHECK_THROWS_AS(deserialize_model(b), TruncatedError);
    b = good;
    b[40] ^= 0x10;
    CHECK_THROWS_AS(deserialize_model(b), ChecksumError);
    b = good;
    b.push_back(0);
    CHECK_THROWS_AS(deserialize_model(b), FormatError);
    CHECK_THROWS_AS(deserialize_encoding(good), BadMagicError);

    // Every single-byte flip is caught by some check, never a crash.
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        b = good;
        b[rng.index(b.size())] ^= static_cast<std::uint8_t>(1 + rng.index(255));
        CHECK_THROWS_AS(deserialize_model(b), FormatError);
    }
}

TEST_CASE("a head container is not a model")
{
    Bytes payload;
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(ContainerKind::downstream_head));
    CHECK_THROWS_AS(deserialize_model(wrap_container("SNET", w.bytes())), FormatError);
}

TEST_CASE("load of a missing file is an IO error naming the path")
{
    try {
        load_model("/nonexistent/dir/model.snet");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/model.snet") != std::string::npos);
    }
}

}
