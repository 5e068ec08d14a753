#include "sinevid/config.hpp"

#include "sinevid/binary_io.hpp"
#include "sinevid/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

namespace sinevid {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_unsigned(std::string_view s)
{
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
    return v;
}

double parse_real(std::string_view s)
{
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("expected a finite real number, got '" + std::string(s) + "'");
    return v;
}

Precision parse_precision(std::string_view s)
{
    if (s == "f32")
        return Precision::f32;
    if (s == "f64")
        return Precision::f64;
    throw ConfigError("expected precision f32 or f64, got '" + std::string(s) + "'");
}

std::string real_text(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

template <class M>
Field size_field(M TrainConfig::*member)
{
    return {[member](TrainConfig& c, std::string_view v) { c.*member = static_cast<M>(parse_unsigned(v)); },
            [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double TrainConfig::*member)
{
    return {[member](TrainConfig& c, std::string_view v) { c.*member = parse_real(v); },
            [member](const TrainConfig& c) { return real_text(c.*member); }};
}

const std::map<std::string, Field, std::less<>>& fields()
{
    static const std::map<std::string, Field, std::less<>> table = {
        {"layers", size_field(&TrainConfig::layers)},
        {"hidden", size_field(&TrainConfig::hidden)},
        {"video_dim", size_field(&TrainConfig::video_dim)},
        {"frame_dim", size_field(&TrainConfig::frame_dim)},
        {"inner_steps", size_field(&TrainConfig::inner_steps)},
        {"inner_lr", real_field(&TrainConfig::inner_lr)},
        {"meta_lr", real_field(&TrainConfig::meta_lr)},
        {"batch_frames", size_field(&TrainConfig::batch_frames)},
        {"coords_per_frame", size_field(&TrainConfig::coords_per_frame)},
        {"iterations", size_field(&TrainConfig::iterations)},
        {"omega0", real_field(&TrainConfig::omega0)},
        {"seed", size_field(&TrainConfig::seed)},
        {"precision",
         {[](TrainConfig& c, std::string_view v) { c.precision = parse_precision(v); },
          [](const TrainConfig& c) { return to_string(c.precision); }}},
        {"log_every", size_field(&TrainConfig::log_every)},
        {"checkpoint_every", size_field(&TrainConfig::checkpoint_every)},
        {"validate_every", size_field(&TrainConfig::validate_every)},
    };
    return table;
}

const char* const kRequired[] = {"batch_frames", "coords_per_frame", "iterations"};

} // namespace

std::string to_string(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    for (const auto& [k, f] : fields())
        keys.push_back(k);
    return keys;
}

TrainConfig parse_config(std::string_view text, const std::string& origin)
{
    TrainConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
        const std::string_view k = trim(line.substr(0, eq));
        const std::string_view v = trim(line.substr(eq + 1));
        const auto it = fields().find(k);
        if (it == fields().end())
            throw ConfigError(where + "unknown key '" + std::string(k) + "'");
        if (!seen.insert(std::string(k)).second)
            throw ConfigError(where + "duplicate key '" + std::string(k) + "'");
        try {
            it->second.set(cfg, v);
        } catch (const ConfigError& e) {
            throw ConfigError(where + std::string(k) + ": " + e.what());
        }
    }
    for (const char* k : kRequired)
        if (!seen.contains(std::string_view(k)))
            throw ConfigError(origin + ": missing required key '" + k + "'");
    try {
        cfg.validate();
    } catch (const ContractError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& path)
{
    const Bytes bytes = read_file(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

void apply_seed_override(TrainConfig& cfg)
{
    const char* env = std::getenv("SINEVID_SEED");
    if (!env || !*env)
        return;
    try {
        cfg.seed = parse_unsigned(trim(env));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("SINEVID_SEED: ") + e.what());
    }
}

std::string format_config(const TrainConfig& cfg)
{
    std::string out;
    for (const auto& [k, f] : fields())
        out += k + " = " + f.get(cfg) + "\n";
    return out;
}

} // namespace sinevid
