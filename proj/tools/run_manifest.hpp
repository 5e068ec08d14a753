#pragma once

// Per-command record written to <out>/run_manifest.json. Output files are
// listed with FNV-1a hashes; `output_digest` folds those hashes in name
// order and is what two runs with the same seed must agree on. Logs carry
// timings, so they are listed without a hash.

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sinevid::cli {

class RunManifest {
public:
    RunManifest(std::string command, std::vector<std::string> arguments, std::filesystem::path out_dir);

    void set_config(const std::string& canonical_text);
    void set_seed(const std::string& name, std::uint64_t value);
    void add_input(const std::filesystem::path& path);
    // Path relative to the run directory (or absolute inside it).
    void add_output(const std::filesystem::path& path);
    void add_log(const std::filesystem::path& path);
    void add_failure(const std::string& item, const std::string& message);
    void add_note(const std::string& key, nlohmann::ordered_json value);

    // Hashes outputs, stamps the end time and writes run_manifest.json.
    // Returns the output digest.
    std::string finish(bool ok);

    const std::filesystem::path& out_dir() const { return out_dir_; }

private:
    std::string relative(const std::filesystem::path& p) const;

    std::filesystem::path out_dir_;
    nlohmann::ordered_json doc_;
    std::vector<std::string> outputs_;
    std::vector<std::string> logs_;
    nlohmann::ordered_json failures_ = nlohmann::ordered_json::array();
};

std::string utc_now();

} // namespace sinevid::cli
