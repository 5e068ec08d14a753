#include "doctest.h"

#include "sinevid/config.hpp"
#include "sinevid/errors.hpp"

#include <cstdlib>

using namespace sinevid;

namespace {
const char* kMinimal = "batch_frames = 4\ncoords_per_frame = 256\niterations = 10\n";
}

TEST_SUITE("config") {

TEST_CASE("minimal config keeps the defaults")
{
    const TrainConfig cfg = parse_config(kMinimal);
    const TrainConfig defaults;
    CHECK(cfg.batch_frames == 4);
    CHECK(cfg.coords_per_frame == 256);
    CHECK(cfg.iterations == 10);
    CHECK(cfg.layers == defaults.layers);
    CHECK(cfg.hidden == defaults.hidden);
    CHECK(cfg.video_dim == defaults.video_dim);
    CHECK(cfg.frame_dim == defaults.frame_dim);
    CHECK(cfg.inner_lr == defaults.inner_lr);
    CHECK(cfg.meta_lr == defaults.meta_lr);
    CHECK(cfg.omega0 == 30.0);
}

TEST_CASE("every key round-trips through the canonical form")
{
    TrainConfig cfg = parse_config(std::string(kMinimal) +
                                   "layers = 3 # K\nhidden=16\nvideo_dim = 12\nframe_dim = 5\ninner_steps = 2\n"
                                   "inner_lr = 0.25\nmeta_lr = 3e-3\nomega0 = 20\nseed = 99\nprecision = f64\n"
                                   "log_every = 7\ncheckpoint_every = 3\nvalidate_every = 2\n");
    CHECK(cfg.layers == 3);
    CHECK(cfg.meta_lr == 3e-3);
    CHECK(cfg.precision == Precision::f64);
    CHECK(cfg.seed == 99);
    const std::string text = format_config(cfg);
    CHECK(format_config(parse_config(text)) == text);
    for (const auto& key : config_keys())
        CHECK(text.find(key + " = ") != std::string::npos);
    CHECK(config_keys().size() == 16);
}

TEST_CASE("errors name the line and the key")
{
    CHECK_THROWS_WITH_AS(parse_config(std::string(kMinimal) + "\nlayerz = 3\n", "desk.cfg"),
                         "desk.cfg:5: unknown key 'layerz'", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("batch_frames = 4\nbatch_frames = 5\n", "a"),
                         doctest::Contains("a:2: duplicate key 'batch_frames'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("batch_frames = four\n", "a"), doctest::Contains("a:1:"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("batch_frames 4\n", "a"), doctest::Contains("a:1:"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("batch_frames = 4\niterations = 1\n", "a"),
                         doctest::Contains("missing required key 'coords_per_frame'"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "precision = f16\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "inner_lr = nan\n"), ConfigError);
}

TEST_CASE("validation failures surface as config errors")
{
    CHECK_THROWS_AS(parse_config("batch_frames = 0\ncoords_per_frame = 4\niterations = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "layers = 0\n"), ConfigError);
}

TEST_CASE("SINEVID_SEED overrides the configured seed")
{
    TrainConfig cfg = parse_config(std::string(kMinimal) + "seed = 1\n");
    ::unsetenv("SINEVID_SEED");
    apply_seed_override(cfg);
    CHECK(cfg.seed == 1);
    ::setenv("SINEVID_SEED", "42", 1);
    apply_seed_override(cfg);
    CHECK(cfg.seed == 42);
    ::setenv("SINEVID_SEED", "x", 1);
    CHECK_THROWS_AS(apply_seed_override(cfg), ConfigError);
    ::unsetenv("SINEVID_SEED");
}

}
