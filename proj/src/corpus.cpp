#include "sinevid/corpus.hpp"

#include "sinevid/binary_io.hpp"
#include "sinevid/errors.hpp"
#include "sinevid/random.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace sinevid {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class N>
N parse_number(std::string_view s)
{
    N v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("malformed number '" + std::string(s) + "'");
    return v;
}

std::string real_text(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void CorpusSpec::validate() const
{
    if (frames < 1 || height < 1 || width < 1)
        throw ContractError("corpus frames, height and width must be >= 1");
    if (trajectory != "linear" && trajectory != "circular" && trajectory != "mixed")
        throw ContractError("corpus trajectory must be linear, circular or mixed");
    if (!(sigma > 0.0))
        throw ContractError("corpus sigma must be positive");
    if (!(amplitude >= 0.0) || !(speed_min >= 0.0) || !(speed_max >= speed_min))
        throw ContractError("corpus needs amplitude >= 0 and 0 <= speed_min <= speed_max");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw ContractError("corpus test_fraction must lie in [0, 1)");
}

CorpusSpec parse_corpus_spec(std::string_view text, const std::string& origin)
{
    CorpusSpec spec;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where + "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            if (key == "family")
                spec.family = parse_family(std::string(value));
            else if (key == "trajectory")
                spec.trajectory = std::string(value);
            else if (key == "frames")
                spec.frames = parse_number<std::size_t>(value);
            else if (key == "height")
                spec.height = parse_number<std::size_t>(value);
            else if (key == "width")
                spec.width = parse_number<std::size_t>(value);
            else if (key == "amplitude")
                spec.amplitude = parse_number<double>(value);
            else if (key == "sigma")
                spec.sigma = parse_number<double>(value);
            else if (key == "speed_min")
                spec.speed_min = parse_number<double>(value);
            else if (key == "speed_max")
                spec.speed_max = parse_number<double>(value);
            else if (key == "background_seed")
                spec.background_seed = parse_number<std::uint64_t>(value);
            else if (key == "test_fraction")
                spec.test_fraction = parse_number<double>(value);
            else
                throw ConfigError("unknown key '" + key + "'");
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
        if (pos > text.size())
            break;
    }
    try {
        spec.validate();
    } catch (const ContractError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return spec;
}

CorpusSpec load_corpus_spec(const fs::path& path)
{
    const Bytes data = read_file(path);
    return parse_corpus_spec(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()),
                             path.string());
}

std::string format_corpus_spec(const CorpusSpec& spec)
{
    std::ostringstream out;
    out << "family = " << to_string(spec.family) << "\n"
        << "trajectory = " << spec.trajectory << "\n"
        << "frames = " << spec.frames << "\n"
        << "height = " << spec.height << "\n"
        << "width = " << spec.width << "\n"
        << "amplitude = " << real_text(spec.amplitude) << "\n"
        << "sigma = " << real_text(spec.sigma) << "\n"
        << "speed_min = " << real_text(spec.speed_min) << "\n"
        << "speed_max = " << real_text(spec.speed_max) << "\n"
        << "test_fraction = " << real_text(spec.test_fraction) << "\n";
    if (spec.background_seed)
        out << "background_seed = " << *spec.background_seed << "\n";
    return out.str();
}

std::string to_string(Split s)
{
    return s == Split::train ? "train" : "test";
}

SynthSpec corpus_item(const CorpusSpec& spec, std::uint64_t seed, std::size_t index)
{
    Rng rng({seed, key(Stream::corpus), static_cast<std::uint64_t>(index)});
    SynthSpec item;
    item.family = spec.family;
    const std::uint64_t drawn = rng.next();
    item.background_seed = spec.background_seed.value_or(drawn);
    item.frames = spec.frames;
    item.height = spec.height;
    item.width = spec.width;
    item.amplitude = spec.amplitude;
    item.sigma = spec.sigma;
    item.speed = rng.uniform(spec.speed_min, spec.speed_max);
    const bool circular = rng.uniform() < 0.5;
    if (spec.trajectory == "mixed")
        item.trajectory = circular ? Trajectory::circular : Trajectory::linear;
    else
        item.trajectory = parse_trajectory(spec.trajectory);
    return item;
}

std::vector<Split> corpus_splits(std::size_t count, double test_fraction, std::uint64_t seed)
{
    std::vector<Split> splits(count, Split::train);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(count) * test_fraction));
    Rng rng({seed, key(Stream::split)});
    for (const auto i : rng.sample_without_replacement(static_cast<std::uint32_t>(count),
                                                        static_cast<std::uint32_t>(std::min(n_test, count))))
        splits[i] = Split::test;
    return splits;
}

fs::path gen_corpus(const CorpusSpec& spec, const fs::path& out_dir, std::size_t count, std::uint64_t seed)
{
    spec.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError(out_dir.string() + ": cannot create directory: " + ec.message());
    const auto splits = corpus_splits(count, spec.test_fraction, seed);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < count; ++i) {
        const SynthVideo sv = gen_synthetic(corpus_item(spec, seed, i));
        char name[48];
        std::snprintf(name, sizeof name, "video_%04zu.rawvid", i);
        save_rawvid(sv.video, out_dir / name);
        entries.push_back({name, sv.label.speed, sv.label.trajectory_class, splits[i]});
    }
    const fs::path manifest = out_dir / "manifest.tsv";
    write_manifest(entries, manifest);
    return manifest;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path)
{
    std::string text = "# path\tspeed\tclass\tsplit\n";
    for (const auto& e : entries)
        text += e.path.generic_string() + "\t" + real_text(e.speed) + "\t" + std::to_string(e.trajectory_class) +
                "\t" + to_string(e.split) + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<ManifestEntry> read_manifest(const fs::path& path)
{
    const Bytes data = read_file(path);
    std::istringstream in(std::string(data.begin(), data.end()));
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#')
            continue;
        std::vector<std::string> cols;
        std::string_view rest = body;
        while (true) {
            const auto tab = rest.find('\t');
            cols.emplace_back(trim(rest.substr(0, tab)));
            if (tab == std::string_view::npos)
                break;
            rest = rest.substr(tab + 1);
        }
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        if (cols.size() != 4)
            throw FormatError(where + "expected 4 tab-separated columns, got " + std::to_string(cols.size()));
        ManifestEntry e;
        try {
            e.path = path.parent_path() / cols[0];
            e.speed = parse_number<double>(cols[1]);
            e.trajectory_class = parse_number<int>(cols[2]);
        } catch (const ConfigError& err) {
            throw FormatError(where + err.what());
        }
        if (cols[3] == "train")
            e.split = Split::train;
        else if (cols[3] == "test")
            e.split = Split::test;
        else
            throw FormatError(where + "split must be train or test, got '" + cols[3] + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace sinevid
