#include "doctest.h"

#include "sinevid/binary_io.hpp"
#include "sinevid/corpus.hpp"
#include "sinevid/errors.hpp"
#include "sinevid/video.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace sinevid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("sinevid_test_" + name + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::string& bytes)
{
    std::ofstream(p, std::ios::binary) << bytes;
}

std::string pgm(std::size_t w, std::size_t h, unsigned char fill)
{
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + std::string(w * h, char(fill));
}

} // namespace

TEST_SUITE("data") {

TEST_CASE("1x1x1 rawvid with payload 0.5")
{
    TempDir dir("raw1");
    ByteWriter w;
    w.tag("VRAW");
    w.u32(1);
    w.u32(1);
    w.u32(1);
    w.f32(0.5f);
    write_file_atomic(dir.path / "a.rawvid", w.bytes());
    const VideoTensor v = load_video(dir.path / "a.rawvid");
    CHECK(v.frames == 1);
    CHECK(v.height == 1);
    CHECK(v.width == 1);
    CHECK(v.values[0] == 0.5f);
}

TEST_CASE("rawvid round trip is bit-exact")
{
    TempDir dir("rawrt");
    const VideoTensor v = gen_synthetic({.frames = 3, .height = 5, .width = 7}).video;
    save_rawvid(v, dir.path / "v.rawvid");
    CHECK(load_rawvid(dir.path / "v.rawvid") == v);
    const Bytes first = read_file(dir.path / "v.rawvid");
    save_rawvid(load_rawvid(dir.path / "v.rawvid"), dir.path / "w.rawvid");
    CHECK(read_file(dir.path / "w.rawvid") == first);
}

TEST_CASE("rawvid errors are distinct")
{
    TempDir dir("rawerr");
    write_bytes(dir.path / "magic.rawvid", std::string("XRAW") + std::string(16, '\0'));
    CHECK_THROWS_AS(load_rawvid(dir.path / "magic.rawvid"), BadMagicError);

    ByteWriter w;
    w.tag("VRAW");
    w.u32(2);
    w.u32(2);
    w.u32(2);
    w.f32(0.1f);
    write_file_atomic(dir.path / "short.rawvid", w.bytes());
    CHECK_THROWS_AS(load_rawvid(dir.path / "short.rawvid"), TruncatedError);

    CHECK_THROWS_AS(load_video(dir.path / "missing.rawvid"), IoError);
}

TEST_CASE("PGM frame of all 255 loads as 1.0")
{
    TempDir dir("pgm255");
    write_bytes(dir.path / "f0.pgm", pgm(4, 3, 255));
    const VideoTensor v = load_video(dir.path);
    CHECK(v.frames == 1);
    CHECK(v.height == 3);
    CHECK(v.width == 4);
    for (float x : v.values)
        CHECK(x == 1.0f);
}

TEST_CASE("PGM frames load in lexicographic order")
{
    TempDir dir("pgmorder");
    write_bytes(dir.path / "b.pgm", pgm(2, 2, 51));
    write_bytes(dir.path / "a.pgm", pgm(2, 2, 0));
    write_bytes(dir.path / "c.pgm", pgm(2, 2, 255));
    const VideoTensor v = load_pgm_dir(dir.path);
    REQUIRE(v.frames == 3);
    CHECK(v.at(0, 0, 0) == 0.0f);
    CHECK(v.at(1, 0, 0) == doctest::Approx(0.2));
    CHECK(v.at(2, 1, 1) == 1.0f);
}

TEST_CASE("PGM directory errors are distinct")
{
    TempDir dir("pgmerr");
    fs::create_directories(dir.path / "empty");
    CHECK_THROWS_AS(load_pgm_dir(dir.path / "empty"), EmptyInputError);

    fs::create_directories(dir.path / "mixed");
    write_bytes(dir.path / "mixed" / "a.pgm", pgm(2, 2, 0));
    write_bytes(dir.path / "mixed" / "b.pgm", pgm(3, 2, 0));
    CHECK_THROWS_AS(load_pgm_dir(dir.path / "mixed"), InconsistentFramesError);

    fs::create_directories(dir.path / "bad");
    write_bytes(dir.path / "bad" / "a.pgm", "P2\n2 2\n255\n0 0 0 0");
    CHECK_THROWS_AS(load_pgm_dir(dir.path / "bad"), BadMagicError);
}

TEST_CASE("PGM round trip quantizes to 8-bit levels")
{
    TempDir dir("pgmrt");
    VideoTensor v(2, 3, 3);
    for (std::size_t i = 0; i < v.values.size(); ++i)
        v.values[i] = float(i * 13 % 256) / 255.0f;
    save_pgm_dir(v, dir.path / "frames");
    const VideoTensor back = load_video(dir.path / "frames");
    REQUIRE(back.same_dims(v));
    for (std::size_t i = 0; i < v.values.size(); ++i)
        CHECK(back.values[i] == v.values[i]);
}

TEST_CASE("resize examples")
{
    const VideoTensor v = gen_synthetic({.frames = 2, .height = 9, .width = 11}).video;
    CHECK(resize_video(v, 9, 11) == v);

    const VideoTensor c(3, 4, 5, 0.37f);
    for (auto [h, w] : {std::pair{1, 1}, {7, 3}, {16, 16}}) {
        const VideoTensor r = resize_video(c, h, w);
        CHECK(r.frames == 3);
        CHECK(r.height == std::size_t(h));
        for (float x : r.values)
            CHECK(x == doctest::Approx(0.37f).epsilon(1e-6));
    }

    const VideoTensor checker(1, 2, 2, std::vector<float>{0, 1, 1, 0});
    CHECK(resize_video(checker, 1, 1).values[0] == doctest::Approx(0.5));
    CHECK_THROWS_AS(resize_video(checker, 0, 1), ContractError);
}

TEST_CASE("resize keeps values in [0, 1]")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const VideoTensor v = gen_synthetic({.family = SynthFamily::speckle, .background_seed = seed}).video;
        CHECK_NOTHROW(resize_video(v, 13, 45).validate());
    }
}

TEST_CASE("synthetic video with zero amplitude is time-constant")
{
    for (auto family : {SynthFamily::blob, SynthFamily::sweep, SynthFamily::speckle}) {
        const VideoTensor v = gen_synthetic({.family = family, .background_seed = 3, .amplitude = 0.0}).video;
        for (std::size_t t = 1; t < v.frames; ++t)
            CHECK(std::memcmp(v.frame(t).data(), v.frame(0).data(), v.frame_size() * sizeof(float)) == 0);
    }
}

TEST_CASE("synthetic generation is deterministic and valid")
{
    const SynthSpec spec{.family = SynthFamily::speckle, .background_seed = 11, .trajectory = Trajectory::circular};
    const SynthVideo a = gen_synthetic(spec), b = gen_synthetic(spec);
    CHECK(a.video == b.video);
    CHECK_NOTHROW(a.video.validate());
    CHECK(a.label.speed == spec.speed);
    CHECK(a.label.trajectory_class == 1);
    const SynthVideo other = gen_synthetic({.family = SynthFamily::speckle, .background_seed = 12});
    CHECK_FALSE(other.video == a.video);
}

TEST_CASE("temporal variance concentrates on the blob path")
{
    for (auto traj : {Trajectory::linear, Trajectory::circular}) {
        SynthSpec spec{.background_seed = 5, .frames = 8, .height = 32, .width = 32, .trajectory = traj};
        const VideoTensor v = gen_synthetic(spec).video;
        double on = 0, off = 0;
        std::size_t n_on = 0, n_off = 0;
        for (std::size_t i = 0; i < v.height; ++i)
            for (std::size_t j = 0; j < v.width; ++j) {
                double m = 0, m2 = 0;
                double dmin = 1e300;
                for (std::size_t t = 0; t < v.frames; ++t) {
                    m += v.at(t, i, j);
                    m2 += double(v.at(t, i, j)) * v.at(t, i, j);
                    const auto [cx, cy] = blob_center(spec, t);
                    dmin = std::min(dmin, std::hypot(double(j) - cx, double(i) - cy));
                }
                m /= double(v.frames);
                const double var = m2 / double(v.frames) - m * m;
                if (dmin <= spec.sigma) {
                    on += var;
                    ++n_on;
                } else if (dmin > 3 * spec.sigma) {
                    off += var;
                    ++n_off;
                }
            }
        REQUIRE(n_on > 0);
        REQUIRE(n_off > 0);
        CHECK(on / double(n_on) > 5.0 * (off / double(n_off)));
    }
}

TEST_CASE("corpus spec parsing")
{
    const CorpusSpec s = parse_corpus_spec("family = sweep # comment\ntrajectory=mixed\nframes = 4\nspeed_max = 3\n");
    CHECK(s.family == SynthFamily::sweep);
    CHECK(s.trajectory == "mixed");
    CHECK(s.frames == 4);
    CHECK(s.speed_max == 3.0);
    CHECK(parse_corpus_spec(format_corpus_spec(s)).speed_max == 3.0);
    CHECK_THROWS_WITH_AS(parse_corpus_spec("frames = 4\nbogus = 1\n", "c.txt"), "c.txt:2: unknown key 'bogus'",
                         ConfigError);
    CHECK_THROWS_AS(parse_corpus_spec("frames = x\n"), ConfigError);
    CHECK_THROWS_AS(parse_corpus_spec("frames = 2\nframes = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_corpus_spec("test_fraction = 1\n"), ConfigError);
}

TEST_CASE("corpus splits count")
{
    const auto splits = corpus_splits(20, 0.2, 9);
    CHECK(std::count(splits.begin(), splits.end(), Split::test) == 4);
    CHECK(std::count(splits.begin(), splits.end(), Split::train) == 16);
    CHECK(corpus_splits(20, 0.2, 9) == splits);
    const auto one = corpus_splits(1, 0.2, 9);
    CHECK(one.size() == 1);
}

TEST_CASE("gen_corpus writes videos and a manifest")
{
    TempDir dir("corpus");
    CorpusSpec spec;
    spec.trajectory = "mixed";
    spec.frames = 3;
    spec.height = 8;
    spec.width = 8;

    const fs::path m1 = gen_corpus(spec, dir.path / "one", 1, 4);
    const auto single = read_manifest(m1);
    REQUIRE(single.size() == 1);
    CHECK(fs::exists(single[0].path));

    const fs::path ma = gen_corpus(spec, dir.path / "a", 20, 4);
    const fs::path mb = gen_corpus(spec, dir.path / "b", 20, 4);
    CHECK(read_file(ma) == read_file(mb));
    const auto entries = read_manifest(ma);
    REQUIRE(entries.size() == 20);
    std::size_t n_test = 0;
    for (const auto& e : entries) {
        n_test += e.split == Split::test;
        CHECK(read_file(e.path) == read_file(dir.path / "b" / e.path.filename()));
        CHECK(e.speed >= spec.speed_min);
        CHECK(e.speed <= spec.speed_max);
    }
    CHECK(n_test == 4);
    // Item i does not depend on the corpus size.
    CHECK(read_file(single[0].path) == read_file(entries[0].path));
}

TEST_CASE("malformed manifests are rejected with the line number")
{
    TempDir dir("manifest");
    write_bytes(dir.path / "m.tsv", "# header\nv.rawvid\t1.0\t0\n");
    CHECK_THROWS_WITH_AS(read_manifest(dir.path / "m.tsv"),
                         doctest::Contains("m.tsv:2: expected 4 tab-separated columns"), FormatError);
    write_bytes(dir.path / "n.tsv", "v.rawvid\t1.0\t0\tvalidation\n");
    CHECK_THROWS_AS(read_manifest(dir.path / "n.tsv"), FormatError);
}

}
