#include "doctest.h"

#include "sinevid/binary_io.hpp"
#include "sinevid/codec.hpp"
#include "sinevid/corpus.hpp"
#include "sinevid/video.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace sinevid;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

// Removed when the test process exits.
fs::path scratch()
{
    static const struct Dir {
        fs::path path = fs::temp_directory_path() / ("sinevid_cli_test_" + std::to_string(::getpid()));
        Dir() { fs::create_directories(path); }
        ~Dir() { fs::remove_all(path); }
    } dir;
    return dir.path;
}

// Runs the CLI with `args`; stdout and stderr are captured together.
Run cli(const std::string& args, const std::string& env = "")
{
    static int counter = 0;
    const fs::path log = scratch() / ("out_" + std::to_string(counter++) + ".txt");
    const std::string cmd = env + " \"" SINEVID_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

const char* kTinyConfig = "layers = 2\nhidden = 8\nvideo_dim = 8\nframe_dim = 4\ninner_steps = 3\n"
                          "inner_lr = 0.1\nmeta_lr = 1e-2\nbatch_frames = 2\ncoords_per_frame = 16\n"
                          "iterations = 5\nseed = 3\n";

const char* kTinyCorpus = "frames = 4\nheight = 8\nwidth = 8\ntrajectory = mixed\n";

nlohmann::json manifest_of(const fs::path& run_dir)
{
    std::ifstream in(run_dir / "run_manifest.json");
    return nlohmann::json::parse(in);
}

// Small corpus plus a trained tiny model, built once.
struct Fixture {
    fs::path root, corpus, config, model;
    Fixture()
    {
        root = scratch() / "fixture";
        fs::create_directories(root);
        write_text(root / "tiny.cfg", kTinyConfig);
        write_text(root / "spec.txt", kTinyCorpus);
        config = root / "tiny.cfg";
        REQUIRE(cli("gen-corpus -q --spec " + q(root / "spec.txt") + " --count 10 --seed 2 --out " +
                    q(root / "corpus"))
                    .code == 0);
        corpus = root / "corpus" / "manifest.tsv";
        REQUIRE(cli("train -q --corpus " + q(corpus) + " --config " + q(config) + " --out " + q(root / "train"))
                    .code == 0);
        model = root / "train" / "model.snet";
    }
};

const Fixture& fixture()
{
    static const Fixture f;
    return f;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-corpus with count 1 writes one video and a manifest listing it")
{
    const fs::path out = scratch() / "one";
    const Run r = cli("gen-corpus --count 1 --seed 0 --out " + q(out));
    REQUIRE(r.code == 0);
    const auto entries = read_manifest(out / "manifest.tsv");
    REQUIRE(entries.size() == 1);
    CHECK(fs::exists(entries[0].path));
    CHECK_NOTHROW(load_video(entries[0].path).validate());
    const auto m = manifest_of(out);
    CHECK(m["command"] == "gen-corpus");
    CHECK(m["status"] == "ok");
    CHECK(m["outputs"].size() == 2);
}

TEST_CASE("gen-corpus: same seed gives a byte-identical corpus, 20 videos split 16/4")
{
    const fs::path a = scratch() / "corpus_a", b = scratch() / "corpus_b";
    REQUIRE(cli("gen-corpus -q --count 20 --seed 5 --out " + q(a)).code == 0);
    REQUIRE(cli("gen-corpus -q --count 20 --seed 5 --out " + q(b)).code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename() == "run_manifest.json")
            continue;
        ++files;
        CHECK(read_file(e.path()) == read_file(b / e.path().filename()));
    }
    CHECK(files == 21);
    CHECK(manifest_of(a)["output_digest"] == manifest_of(b)["output_digest"]);
    std::size_t train = 0, test = 0;
    for (const auto& e : read_manifest(a / "manifest.tsv"))
        (e.split == Split::train ? train : test)++;
    CHECK(train == 16);
    CHECK(test == 4);
}

TEST_CASE("train with iterations = 0 writes the initial model")
{
    const fs::path dir = scratch() / "train0";
    fs::create_directories(dir);
    std::string cfg = kTinyConfig;
    cfg.replace(cfg.find("iterations = 5"), 14, "iterations = 0");
    write_text(dir / "zero.cfg", cfg);
    const auto& f = fixture();
    const Run r = cli("train -q --corpus " + q(f.corpus) + " --config " + q(dir / "zero.cfg") + " --out " +
                      q(dir / "run"));
    REQUIRE(r.code == 0);
    const auto ck = load_model(dir / "run" / "model.snet");
    CHECK(ck.iteration == 0);
    const auto fresh = MetaModel<float>::initialize(ck.model.dims, 3);
    CHECK(serialize_model(ck.model) == serialize_model(fresh));
}

TEST_CASE("train: log, manifest and SINEVID_SEED")
{
    const auto& f = fixture();
    std::ifstream log(f.root / "train" / "train.log");
    std::size_t lines = 0;
    for (std::string line; std::getline(log, line);)
        lines += line.rfind("iter=", 0) == 0;
    CHECK(lines == 5);
    const auto m = manifest_of(f.root / "train");
    CHECK(m["seeds"]["seed"] == 3);
    CHECK(m["config"]["iterations"] == "5");
    CHECK(m["outputs"].contains("model.snet"));
    CHECK(m["logs"][0] == "train.log");

    const fs::path dir = scratch() / "train_env";
    REQUIRE(cli("train -q --corpus " + q(f.corpus) + " --config " + q(f.config) + " --out " + q(dir),
                "SINEVID_SEED=11")
                .code == 0);
    CHECK(manifest_of(dir)["seeds"]["seed"] == 11);
    CHECK(manifest_of(dir)["output_digest"] != m["output_digest"]);
}

TEST_CASE("config errors name the key or line and exit nonzero")
{
    const fs::path dir = scratch() / "badcfg";
    fs::create_directories(dir);
    write_text(dir / "missing.cfg", "batch_frames = 2\niterations = 1\n");
    write_text(dir / "typo.cfg", std::string(kTinyConfig) + "inner_lrr = 0.1\n");
    const auto& f = fixture();
    Run r = cli("train --corpus " + q(f.corpus) + " --config " + q(dir / "missing.cfg") + " --out " + q(dir / "a"));
    CHECK(r.code != 0);
    CHECK(r.output.find("coords_per_frame") != std::string::npos);
    r = cli("train --corpus " + q(f.corpus) + " --config " + q(dir / "typo.cfg") + " --out " + q(dir / "b"));
    CHECK(r.code != 0);
    CHECK(r.output.find("typo.cfg:12: unknown key 'inner_lrr'") != std::string::npos);
}

TEST_CASE("encode N videos gives N encodings and one manifest; decode restores dims")
{
    const auto& f = fixture();
    const fs::path enc = scratch() / "encode", dec = scratch() / "decode";
    Run r = cli("encode --corpus " + q(f.corpus) + " --split test --config " + q(f.config) + " --model " +
                q(f.model) + " --report --out " + q(enc));
    REQUIRE(r.code == 0);
    const auto test_items = [&] {
        std::vector<ManifestEntry> t;
        for (auto& e : read_manifest(f.corpus))
            if (e.split == Split::test)
                t.push_back(e);
        return t;
    }();
    REQUIRE(test_items.size() == 2);
    std::size_t report_lines = 0;
    for (std::size_t pos = 0; (pos = r.output.find("psnr=", pos)) != std::string::npos; ++pos)
        ++report_lines;
    CHECK(report_lines == 2);
    CHECK(r.output.find("ssim3d=") != std::string::npos);
    const auto listed = read_manifest(enc / "encodings.tsv");
    CHECK(listed.size() == 2);
    std::size_t venc = 0;
    for (const auto& e : fs::directory_iterator(enc))
        venc += e.path().extension() == ".venc";
    CHECK(venc == 2);

    std::string args = "decode --model " + q(f.model) + " --out " + q(dec) + " --report";
    for (const auto& e : test_items)
        args += " " + q(enc / (e.path.stem().string() + ".venc")) + " --reference " + q(e.path);
    r = cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("psnr=") != std::string::npos);
    for (const auto& e : test_items) {
        const VideoTensor original = load_video(e.path);
        const VideoTensor back = load_video(dec / (e.path.stem().string() + ".rawvid"));
        CHECK(back.same_dims(original));
    }
}

TEST_CASE("summary writes one frame per encoding")
{
    const auto& f = fixture();
    const fs::path enc = scratch() / "encode_sum", out = scratch() / "summary";
    const auto items = read_manifest(f.corpus);
    REQUIRE(cli("encode -q --config " + q(f.config) + " --model " + q(f.model) + " --out " + q(enc) + " " +
                q(items[0].path))
                .code == 0);
    const fs::path venc = enc / (items[0].path.stem().string() + ".venc");
    REQUIRE(cli("summary --model " + q(f.model) + " --out " + q(out) + " " + q(venc)).code == 0);
    const VideoTensor s = load_video(out / (items[0].path.stem().string() + "_summary.rawvid"));
    CHECK(s.frames == 1);
    CHECK(s.height == 8);
}

TEST_CASE("--jobs does not change outputs")
{
    const auto& f = fixture();
    const fs::path a = scratch() / "jobs1", b = scratch() / "jobs3";
    const std::string common = " --corpus " + q(f.corpus) + " --config " + q(f.config) + " --model " + q(f.model);
    REQUIRE(cli("encode -q --jobs 1" + common + " --out " + q(a)).code == 0);
    REQUIRE(cli("encode -q --jobs 3" + common + " --out " + q(b)).code == 0);
    CHECK(manifest_of(a)["output_digest"] == manifest_of(b)["output_digest"]);
}

TEST_CASE("failed items: stop by default, summarize with --continue-on-error")
{
    const auto& f = fixture();
    const fs::path dir = scratch() / "failures";
    fs::create_directories(dir);
    // An encoding made by another model fails its fingerprint check.
    std::string other_cfg = kTinyConfig;
    other_cfg.replace(other_cfg.find("seed = 3"), 8, "seed = 4");
    write_text(dir / "other.cfg", other_cfg);
    REQUIRE(cli("train -q --corpus " + q(f.corpus) + " --config " + q(dir / "other.cfg") + " --out " +
                q(dir / "other"))
                .code == 0);
    const auto items = read_manifest(f.corpus);
    REQUIRE(cli("encode -q --config " + q(f.config) + " --model " + q(f.model) + " --out " + q(dir / "good") +
                " " + q(items[0].path) + " " + q(items[1].path))
                .code == 0);
    const std::string encs = " " + q(dir / "good" / (items[0].path.stem().string() + ".venc")) + " " +
                             q(dir / "good" / (items[1].path.stem().string() + ".venc"));

    Run r = cli("decode --model " + q(dir / "other" / "model.snet") + " --out " + q(dir / "dec1") + encs);
    CHECK(r.code == 1);
    CHECK(r.output.find("was made with model") != std::string::npos);
    CHECK(r.output.find("not attempted") != std::string::npos);

    r = cli("decode --continue-on-error --model " + q(dir / "other" / "model.snet") + " --out " + q(dir / "dec2") +
            encs);
    CHECK(r.code == 1);
    CHECK(r.output.find("2 of 2 items failed") != std::string::npos);
    CHECK(manifest_of(dir / "dec2")["failures"].size() == 2);
    CHECK(manifest_of(dir / "dec2")["status"] == "failed");

    // A missing input among good ones.
    r = cli("encode --continue-on-error --config " + q(f.config) + " --model " + q(f.model) + " --out " +
            q(dir / "mixed") + " " + q(items[0].path) + " " + q(dir / "nope.rawvid"));
    CHECK(r.code == 1);
    CHECK(r.output.find("1 of 2 items failed") != std::string::npos);
    CHECK(fs::exists(dir / "mixed" / (items[0].path.stem().string() + ".venc")));
}

TEST_CASE("eval prints a metric table over modes")
{
    const auto& f = fixture();
    const std::string common = " --corpus " + q(f.corpus) + " --config " + q(f.config) + " --model " +
                               q(f.model) + " --epochs 5 --hidden 8,4";
    Run r = cli("eval --task regression" + common + " --out " + q(scratch() / "eval_reg"));
    REQUIRE(r.code == 0);
    CHECK(r.output.find("MAE") != std::string::npos);
    CHECK(r.output.find("RMSE") != std::string::npos);
    CHECK(r.output.find("R2") != std::string::npos);
    for (const char* mode : {"\nv ", "\nphi ", "\ncombined "})
        CHECK(r.output.find(mode) != std::string::npos);
    CHECK(fs::exists(scratch() / "eval_reg" / "encodings" / "manifest.tsv"));

    r = cli("eval --task binary --seeds 2" + common + " --out " + q(scratch() / "eval_bin"));
    REQUIRE(r.code == 0);
    CHECK(r.output.find("ACC") != std::string::npos);
    CHECK(r.output.find("AUROC") != std::string::npos);
    CHECK(r.output.find("±") != std::string::npos);

    // Reusing the encodings gives the same table.
    const Run again = cli("eval --task regression --corpus " + q(scratch() / "eval_reg" / "encodings" / "manifest.tsv") +
                          " --model " + q(f.model) + " --epochs 5 --hidden 8,4 --out " + q(scratch() / "eval_reuse"));
    REQUIRE(again.code == 0);
    const Run first = cli("eval --task regression" + common + " --out " + q(scratch() / "eval_reg2"));
    CHECK(again.output == first.output);
}

TEST_CASE("gradcheck subcommand")
{
    const Run r = cli("gradcheck --trials 3 --out " + q(scratch() / "gc"));
    CHECK(r.code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(fs::exists(scratch() / "gc" / "gradcheck.txt"));
}

TEST_CASE("usage errors exit with 2")
{
    CHECK(cli("").code == 2);
    CHECK(cli("train --out x").code == 2);
    CHECK(cli("frobnicate").code == 2);
}

}
