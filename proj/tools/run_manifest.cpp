#include "run_manifest.hpp"

#include "sinevid/binary_io.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>

namespace sinevid::cli {

namespace fs = std::filesystem;

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> arguments, fs::path out_dir)
    : out_dir_(std::move(out_dir))
{
    doc_["command"] = std::move(command);
    doc_["arguments"] = std::move(arguments);
    doc_["started_utc"] = utc_now();
    doc_["config"] = nlohmann::ordered_json::object();
    doc_["seeds"] = nlohmann::ordered_json::object();
    doc_["inputs"] = nlohmann::ordered_json::array();
}

void RunManifest::set_config(const std::string& canonical_text)
{
    std::istringstream in(canonical_text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos)
            doc_["config"][line.substr(0, eq)] = line.substr(eq + 3);
    }
}

void RunManifest::set_seed(const std::string& name, std::uint64_t value)
{
    doc_["seeds"][name] = value;
}

void RunManifest::add_input(const fs::path& path)
{
    nlohmann::ordered_json item;
    item["path"] = fs::absolute(path).lexically_normal().string();
    std::error_code ec;
    if (fs::is_regular_file(path, ec))
        item["fnv1a64"] = hex64(fnv1a64(read_file(path)));
    doc_["inputs"].push_back(std::move(item));
}

std::string RunManifest::relative(const fs::path& p) const
{
    if (p.is_relative())
        return p.generic_string();
    return p.lexically_relative(out_dir_).generic_string();
}

void RunManifest::add_output(const fs::path& path)
{
    outputs_.push_back(relative(path));
}

void RunManifest::add_log(const fs::path& path)
{
    logs_.push_back(relative(path));
}

void RunManifest::add_failure(const std::string& item, const std::string& message)
{
    failures_.push_back({{"item", item}, {"error", message}});
}

void RunManifest::add_note(const std::string& key, nlohmann::ordered_json value)
{
    doc_[key] = std::move(value);
}

std::string RunManifest::finish(bool ok)
{
    std::sort(outputs_.begin(), outputs_.end());
    outputs_.erase(std::unique(outputs_.begin(), outputs_.end()), outputs_.end());
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    ByteWriter fold;
    for (const auto& name : outputs_) {
        const fs::path p = out_dir_ / name;
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            // PGM sequences: hash every frame in order.
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(p))
                files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const std::string key = relative(f);
                const std::uint64_t h = fnv1a64(read_file(f));
                outputs[key] = hex64(h);
                fold.str(key);
                fold.u64(h);
            }
            continue;
        }
        const std::uint64_t h = fnv1a64(read_file(p));
        outputs[name] = hex64(h);
        fold.str(name);
        fold.u64(h);
    }
    const std::string digest = hex64(fnv1a64(fold.bytes()));
    doc_["outputs"] = std::move(outputs);
    doc_["logs"] = logs_;
    doc_["output_digest"] = digest;
    doc_["status"] = ok ? "ok" : "failed";
    doc_["failures"] = failures_;
    doc_["finished_utc"] = utc_now();
    const std::string text = doc_.dump(2) + "\n";
    write_file_atomic(out_dir_ / "run_manifest.json",
                      std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return digest;
}

} // namespace sinevid::cli
