#pragma once

// Synthetic corpus generation and the line-delimited corpus manifest.
//
// A corpus spec is `key = value` text like the training config:
//   family = blob|sweep|speckle      trajectory = linear|circular|mixed
//   frames, height, width            amplitude, sigma
//   speed_min, speed_max             test_fraction (in [0, 1))
//   background_seed (all items share that background; drawn per item when absent)
// Every key is optional. Item i draws its own background seed, speed and
// trajectory from Rng({seed, corpus, i}), so items are independent of count.

#include "sinevid/video.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sinevid {

struct CorpusSpec {
    SynthFamily family = SynthFamily::blob;
    std::string trajectory = "linear"; // linear | circular | mixed
    std::size_t frames = 8;
    std::size_t height = 32;
    std::size_t width = 32;
    double amplitude = 0.4;
    double sigma = 3.0;
    double speed_min = 0.5;
    double speed_max = 2.5;
    double test_fraction = 0.2;
    std::optional<std::uint64_t> background_seed;

    void validate() const;
};

CorpusSpec parse_corpus_spec(std::string_view text, const std::string& origin = "corpus spec");
CorpusSpec load_corpus_spec(const std::filesystem::path& path);
std::string format_corpus_spec(const CorpusSpec& spec);

enum class Split { train, test };
std::string to_string(Split s);

struct ManifestEntry {
    std::filesystem::path path; // resolved against the manifest's directory on read
    double speed = 0.0;
    int trajectory_class = 0;
    Split split = Split::train;
};

// Item i of a corpus, without touching disk.
SynthSpec corpus_item(const CorpusSpec& spec, std::uint64_t seed, std::size_t index);

// Exactly round(count * test_fraction) items land in the test split, chosen
// by a seeded permutation.
std::vector<Split> corpus_splits(std::size_t count, double test_fraction, std::uint64_t seed);

// Writes video_0000.rawvid ... and manifest.tsv into `out_dir`; returns the
// manifest path.
std::filesystem::path gen_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir, std::size_t count,
                                 std::uint64_t seed);

// Manifest lines: `path<TAB>speed<TAB>class<TAB>split`; '#' lines are comments.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

} // namespace sinevid
