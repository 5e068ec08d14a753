#include "commands.hpp"

#include "run_manifest.hpp"

#include "sinevid/codec.hpp"
#include "sinevid/config.hpp"
#include "sinevid/corpus.hpp"
#include "sinevid/downstream.hpp"
#include "sinevid/errors.hpp"
#include "sinevid/gradcheck.hpp"
#include "sinevid/meta_trainer.hpp"
#include "sinevid/metrics.hpp"
#include "sinevid/random.hpp"
#include "sinevid/video.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace sinevid::cli {

namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError(dir.string() + ": cannot create directory: " + ec.message());
}

std::string item_name(const fs::path& path)
{
    fs::path p = path;
    if (!p.has_filename())
        p = p.parent_path();
    return p.stem().string();
}

struct Item {
    std::string name;
    fs::path path;
    ManifestEntry entry; // labels and split when the item came from a corpus
};

std::vector<Item> resolve_inputs(const InputArgs& in, bool require_some = true)
{
    std::vector<Item> items;
    if (in.corpus) {
        if (in.split != "train" && in.split != "test" && in.split != "all")
            throw ConfigError("--split must be train, test or all, got '" + in.split + "'");
        for (auto& e : read_manifest(*in.corpus)) {
            if (in.split != "all" && to_string(e.split) != in.split)
                continue;
            items.push_back({item_name(e.path), e.path, e});
        }
    }
    for (const auto& p : in.paths)
        items.push_back({item_name(p), p, ManifestEntry{p}});
    if (require_some && items.empty())
        throw EmptyInputError("no input videos selected");
    std::set<std::string> names;
    for (const auto& it : items)
        if (!names.insert(it.name).second)
            throw ContractError("two inputs share the name '" + it.name + "'; output files would collide");
    return items;
}

VideoTensor load_input(const fs::path& path, const InputArgs& in)
{
    VideoTensor v = load_video(path);
    if (in.height || in.width) {
        if (!in.height || !in.width)
            throw ConfigError("--height and --width must be given together");
        v = resize_video(v, in.height, in.width);
    }
    v.validate();
    return v;
}

sinevid::EncodeOptions resolve_encode(const EncodeFlags& f)
{
    sinevid::EncodeOptions opts;
    opts.batch_frames = 4;
    if (f.config)
        opts = sinevid::EncodeOptions::from(load_config(*f.config));
    if (f.batch_frames)
        opts.batch_frames = *f.batch_frames;
    if (f.inner_steps)
        opts.inner_steps = *f.inner_steps;
    if (f.inner_lr)
        opts.inner_lr = *f.inner_lr;
    if (opts.batch_frames < 1)
        throw ConfigError("batch_frames must be >= 1");
    return opts;
}

void note_encode(RunManifest& manifest, const sinevid::EncodeOptions& opts)
{
    manifest.add_note("encode", {{"batch_frames", opts.batch_frames},
                                 {"inner_steps", opts.inner_steps},
                                 {"inner_lr", opts.inner_lr}});
}

enum class Outcome { ok, failed, skipped };

struct ItemStatus {
    Outcome outcome = Outcome::skipped;
    std::string message;
};

// Runs fn(i) for every item on up to `jobs` threads. Without
// continue-on-error no new item starts after the first failure.
template <class F>
std::vector<ItemStatus> run_items(std::size_t n, std::size_t jobs, bool continue_on_error, F&& fn)
{
    std::vector<ItemStatus> status(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        while (true) {
            if (stop.load())
                return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
                status[i].outcome = Outcome::ok;
            } catch (const std::exception& e) {
                status[i] = {Outcome::failed, e.what()};
                if (!continue_on_error)
                    stop = true;
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    return status;
}

// Prints failures, records them and returns whether every item succeeded.
bool summarize(const std::vector<Item>& items, const std::vector<ItemStatus>& status, RunManifest& manifest)
{
    std::size_t failed = 0, skipped = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (status[i].outcome == Outcome::failed) {
            ++failed;
            std::cerr << "error: " << items[i].name << ": " << status[i].message << "\n";
            manifest.add_failure(items[i].name, status[i].message);
        } else if (status[i].outcome == Outcome::skipped) {
            ++skipped;
        }
    }
    if (failed)
        std::cerr << failed << " of " << items.size() << " items failed"
                  << (skipped ? " (" + std::to_string(skipped) + " not attempted)" : std::string()) << "\n";
    return failed == 0 && skipped == 0;
}

std::string format_quality(const std::string& name, const QualityReport& q)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "video=%s psnr=%.4f ssim3d=%.6f mse=%.9g", name.c_str(), q.psnr_db, q.ssim3d,
                  q.mse);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace

int cmd_gen_corpus(const CommonArgs& common, const GenCorpusArgs& opts)
{
    make_dir(common.out);
    RunManifest manifest("gen-corpus", common.arguments, common.out);
    CorpusSpec spec;
    if (opts.spec) {
        manifest.add_input(*opts.spec);
        spec = load_corpus_spec(*opts.spec);
    }
    manifest.set_config(format_corpus_spec(spec));
    manifest.set_seed("seed", opts.seed);
    const fs::path list = gen_corpus(spec, common.out, opts.count, opts.seed);
    for (const auto& e : read_manifest(list))
        manifest.add_output(e.path);
    manifest.add_output(list);
    manifest.finish(true);
    if (!common.quiet)
        std::cout << "wrote " << opts.count << " videos and " << list.string() << "\n";
    return kExitOk;
}

namespace {

template <class T>
int run_training(const CommonArgs& common, const std::vector<Item>& items, const InputArgs& inputs,
                 const TrainArgs& opts, const TrainConfig& cfg, RunManifest& manifest)
{
    TrainState<T> state{MetaModel<T>::initialize(cfg.dims(), cfg.seed), 0};
    if (opts.resume) {
        manifest.add_input(*opts.resume);
        auto ck = load_model(*opts.resume);
        if (!(ck.model.dims == cfg.dims()))
            throw ConfigError(opts.resume->string() + ": checkpoint dimensions differ from the config");
        state.model = ck.model.template cast<T>();
        state.iteration = ck.iteration;
    }

    std::vector<VideoSource> dataset;
    for (const auto& it : items)
        dataset.push_back({it.name, [path = it.path, inputs] { return load_input(path, inputs); }});

    std::optional<VideoTensor> validation;
    if (opts.validate) {
        manifest.add_input(*opts.validate);
        validation = load_input(*opts.validate, inputs);
    }

    const fs::path model_path = common.out / "model.snet";
    const fs::path log_path = common.out / "train.log";
    std::ofstream log(log_path, opts.resume ? std::ios::app : std::ios::trunc);
    if (!log)
        throw IoError(log_path.string() + ": cannot open for writing");
    std::vector<std::string> warnings;

    TrainHooks hooks;
    hooks.validation = validation ? &*validation : nullptr;
    hooks.checkpoint = [&](std::size_t iteration) { save_model(model_path, state.model, iteration); };
    hooks.on_log = [&](const LogEntry& e) {
        write_log_line(log, e);
        log.flush();
        const bool due = cfg.log_every && (e.iteration % cfg.log_every == 0 || e.iteration == cfg.iterations);
        if (!common.quiet && (due || e.validation_psnr))
            write_log_line(std::cout, e);
    };
    hooks.warn = [&](const std::string& w) {
        std::cerr << "warning: " << w << "\n";
        warnings.push_back(w);
    };

    try {
        train(state, dataset, cfg, hooks);
    } catch (const DivergenceError& e) {
        std::cerr << "error: training diverged: " << e.what() << "\n";
        std::cerr << "  inner step " << e.step() << ", loss history:";
        for (double l : e.loss_history())
            std::cerr << " " << l;
        std::cerr << "\n  try a smaller inner_lr or meta_lr\n";
        manifest.add_failure("train", e.what());
        manifest.add_log(log_path);
        manifest.finish(false);
        return kExitFailure;
    }
    save_model(model_path, state.model, state.iteration);
    manifest.add_output(model_path);
    manifest.add_log(log_path);
    manifest.add_note("warnings", warnings);
    manifest.add_note("iterations_completed", state.iteration);
    manifest.finish(true);
    if (!common.quiet)
        std::cout << "wrote " << model_path.string() << " after " << state.iteration << " iterations\n";
    return kExitOk;
}

} // namespace

int cmd_train(const CommonArgs& common, const InputArgs& inputs, const TrainArgs& opts)
{
    TrainConfig cfg = load_config(opts.config);
    apply_seed_override(cfg);
    const auto items = resolve_inputs(inputs);
    make_dir(common.out);
    RunManifest manifest("train", common.arguments, common.out);
    manifest.add_input(opts.config);
    if (inputs.corpus)
        manifest.add_input(*inputs.corpus);
    for (const auto& it : items)
        manifest.add_input(it.path);
    const std::string canonical = format_config(cfg);
    manifest.set_config(canonical);
    manifest.set_seed("seed", cfg.seed);
    write_text(common.out / "config.cfg", canonical);
    manifest.add_output("config.cfg");
    if (cfg.precision == Precision::f64)
        return run_training<double>(common, items, inputs, opts, cfg, manifest);
    return run_training<float>(common, items, inputs, opts, cfg, manifest);
}

int cmd_encode(const CommonArgs& common, const InputArgs& inputs, const EncodeArgs& opts)
{
    const auto items = resolve_inputs(inputs);
    const auto enc_opts = resolve_encode(opts.flags);
    make_dir(common.out);
    RunManifest manifest("encode", common.arguments, common.out);
    manifest.add_input(opts.model);
    for (const auto& it : items)
        manifest.add_input(it.path);
    note_encode(manifest, enc_opts);
    const auto model = load_model(opts.model).model;

    std::vector<std::string> reports(items.size());
    const auto status = run_items(items.size(), common.jobs, common.continue_on_error, [&](std::size_t i) {
        const VideoTensor video = load_input(items[i].path, inputs);
        const auto enc = encode_video(model, video, enc_opts);
        save_encoding(common.out / (items[i].name + ".venc"), enc);
        if (opts.report)
            reports[i] = format_quality(items[i].name, quality_report(video, decode_video(model, enc)));
    });
    std::vector<ManifestEntry> written;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (status[i].outcome != Outcome::ok)
            continue;
        ManifestEntry e = items[i].entry;
        e.path = items[i].name + ".venc";
        written.push_back(e);
        manifest.add_output(e.path);
        if (opts.report)
            std::cout << reports[i] << "\n";
    }
    write_manifest(written, common.out / "encodings.tsv");
    manifest.add_output("encodings.tsv");
    const bool ok = summarize(items, status, manifest);
    manifest.finish(ok);
    if (!common.quiet)
        std::cout << "encoded " << written.size() << " of " << items.size() << " videos\n";
    return ok ? kExitOk : kExitFailure;
}

int cmd_decode(const CommonArgs& common, const DecodeArgs& opts)
{
    if (!opts.references.empty() && opts.references.size() != opts.encodings.size())
        throw ConfigError("--reference must be given once per encoding");
    if (opts.report && opts.references.empty())
        throw ConfigError("--report needs --reference videos to compare against");
    InputArgs as_inputs;
    as_inputs.paths = opts.encodings;
    const auto items = resolve_inputs(as_inputs);
    make_dir(common.out);
    RunManifest manifest("decode", common.arguments, common.out);
    manifest.add_input(opts.model);
    for (const auto& p : opts.encodings)
        manifest.add_input(p);
    const auto model = load_model(opts.model).model;

    std::vector<std::string> reports(items.size());
    const auto status = run_items(items.size(), common.jobs, common.continue_on_error, [&](std::size_t i) {
        const auto enc = load_encoding(items[i].path);
        const VideoTensor video = decode_video(model, enc);
        if (opts.pgm)
            save_pgm_dir(video, common.out / items[i].name);
        else
            save_rawvid(video, common.out / (items[i].name + ".rawvid"));
        if (!opts.references.empty()) {
            const VideoTensor ref = load_video(opts.references[i]);
            if (!ref.same_dims(video))
                throw DimensionError("reference " + opts.references[i].string() + " differs in size from the decoded video");
            reports[i] = format_quality(items[i].name, quality_report(ref, video));
        }
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (status[i].outcome != Outcome::ok)
            continue;
        manifest.add_output(opts.pgm ? items[i].name : items[i].name + ".rawvid");
        if (opts.report)
            std::cout << reports[i] << "\n";
    }
    const bool ok = summarize(items, status, manifest);
    manifest.finish(ok);
    return ok ? kExitOk : kExitFailure;
}

int cmd_summary(const CommonArgs& common, const SummaryArgs& opts)
{
    InputArgs as_inputs;
    as_inputs.paths = opts.encodings;
    const auto items = resolve_inputs(as_inputs);
    make_dir(common.out);
    RunManifest manifest("summary", common.arguments, common.out);
    manifest.add_input(opts.model);
    for (const auto& p : opts.encodings)
        manifest.add_input(p);
    const auto model = load_model(opts.model).model;

    const auto status = run_items(items.size(), common.jobs, common.continue_on_error, [&](std::size_t i) {
        const auto enc = load_encoding(items[i].path);
        const VideoTensor frame = decode_static_summary(model, enc);
        save_pgm(frame.frame(0), frame.height, frame.width, common.out / (items[i].name + "_summary.pgm"));
        save_rawvid(frame, common.out / (items[i].name + "_summary.rawvid"));
    });
    for (std::size_t i = 0; i < items.size(); ++i)
        if (status[i].outcome == Outcome::ok) {
            manifest.add_output(items[i].name + "_summary.pgm");
            manifest.add_output(items[i].name + "_summary.rawvid");
        }
    const bool ok = summarize(items, status, manifest);
    manifest.finish(ok);
    return ok ? kExitOk : kExitFailure;
}

namespace {

struct MetricColumn {
    std::string name;
    std::vector<double> values; // one per seed; NaN when undefined
};

std::string mean_std(const std::vector<double>& xs)
{
    std::vector<double> finite;
    for (double x : xs)
        if (!std::isnan(x))
            finite.push_back(x);
    char buf[64];
    if (finite.empty())
        return "n/a";
    double mean = 0;
    for (double x : finite)
        mean += x;
    mean /= double(finite.size());
    if (xs.size() == 1) {
        std::snprintf(buf, sizeof buf, "%.4f", mean);
        return buf;
    }
    double var = 0;
    for (double x : finite)
        var += (x - mean) * (x - mean);
    const double sd = finite.size() > 1 ? std::sqrt(var / double(finite.size() - 1)) : 0.0;
    std::snprintf(buf, sizeof buf, "%.4f ± %.4f", mean, sd);
    return buf;
}

} // namespace

int cmd_eval(const CommonArgs& common, const InputArgs& inputs, const EvalArgs& opts)
{
    if (!inputs.corpus)
        throw ConfigError("eval needs --corpus (a manifest with labels and splits)");
    InputArgs all = inputs;
    all.split = "all";
    const auto items = resolve_inputs(all);
    const HeadTask task = parse_head_task(opts.task);
    std::vector<FeatureMode> modes;
    for (const auto& m : opts.modes)
        modes.push_back(parse_feature_mode(m));
    if (opts.seeds < 1)
        throw ConfigError("--seeds must be >= 1");
    const auto enc_opts = resolve_encode(opts.flags);

    make_dir(common.out);
    make_dir(common.out / "encodings");
    RunManifest manifest("eval", common.arguments, common.out);
    manifest.add_input(opts.model);
    manifest.add_input(*inputs.corpus);
    manifest.set_seed("seed", opts.seed);
    note_encode(manifest, enc_opts);
    const auto model = load_model(opts.model).model;

    // Encodings: reuse .venc entries, encode everything else.
    std::vector<VideoEncoding<float>> encodings(items.size());
    const auto status = run_items(items.size(), common.jobs, common.continue_on_error, [&](std::size_t i) {
        if (items[i].path.extension() == ".venc") {
            encodings[i] = load_encoding(items[i].path);
            return;
        }
        const VideoTensor video = load_input(items[i].path, inputs);
        encodings[i] = encode_video(model, video, enc_opts);
        save_encoding(common.out / "encodings" / (items[i].name + ".venc"), encodings[i]);
    });
    std::vector<ManifestEntry> encoded;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (status[i].outcome == Outcome::ok && items[i].path.extension() != ".venc") {
            ManifestEntry e = items[i].entry;
            e.path = items[i].name + ".venc";
            encoded.push_back(e);
            manifest.add_output(fs::path("encodings") / e.path);
        }
    if (!encoded.empty()) {
        // Lets later evals reuse these encodings through --corpus.
        write_manifest(encoded, common.out / "encodings" / "manifest.tsv");
        manifest.add_output("encodings/manifest.tsv");
    }
    if (!summarize(items, status, manifest) && !common.continue_on_error) {
        manifest.finish(false);
        return kExitFailure;
    }
    const bool all_encoded = std::all_of(status.begin(), status.end(),
                                         [](const ItemStatus& s) { return s.outcome == Outcome::ok; });

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (status[i].outcome != Outcome::ok)
            continue;
        (items[i].entry.split == Split::train ? train_idx : test_idx).push_back(i);
    }
    if (train_idx.size() < 2 || test_idx.empty())
        throw ContractError("eval needs at least 2 train and 1 test item, got " + std::to_string(train_idx.size()) +
                            " and " + std::to_string(test_idx.size()));
    auto label_of = [&](std::size_t i) {
        return task == HeadTask::regression ? items[i].entry.speed : double(items[i].entry.trajectory_class);
    };

    HeadConfig base;
    base.task = task;
    base.hidden = opts.hidden;
    base.dropout = opts.dropout;
    base.epochs = opts.epochs;
    base.batch_size = opts.batch_size;
    base.lr = opts.lr;
    base.validate();
    manifest.add_note("head", {{"task", opts.task},
                               {"hidden", opts.hidden},
                               {"dropout", opts.dropout},
                               {"epochs", opts.epochs},
                               {"batch_size", opts.batch_size},
                               {"lr", opts.lr},
                               {"seeds", opts.seeds},
                               {"shuffle_labels", opts.shuffle_labels}});

    const std::vector<std::string> names = task == HeadTask::regression
                                               ? std::vector<std::string>{"MAE", "RMSE", "R2"}
                                               : std::vector<std::string>{"ACC", "F1", "AUROC"};
    std::ostringstream tsv;
    tsv << "mode\tseed\t" << names[0] << "\t" << names[1] << "\t" << names[2] << "\n";
    std::ostringstream table;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-20s %-20s %-20s\n", "mode", names[0].c_str(), names[1].c_str(),
                  names[2].c_str());
    table << line;

    for (const FeatureMode mode : modes) {
        std::vector<std::vector<double>> xtr, xte;
        std::vector<double> ytr, yte;
        for (auto i : train_idx) {
            xtr.push_back(extract_features(encodings[i], mode));
            ytr.push_back(label_of(i));
        }
        for (auto i : test_idx) {
            xte.push_back(extract_features(encodings[i], mode));
            yte.push_back(label_of(i));
        }
        std::vector<MetricColumn> cols{{names[0], {}}, {names[1], {}}, {names[2], {}}};
        for (std::size_t k = 0; k < opts.seeds; ++k) {
            HeadConfig cfg = base;
            cfg.mode = mode;
            cfg.seed = opts.seed + k;
            std::vector<double> labels = ytr;
            if (opts.shuffle_labels) {
                Rng rng({cfg.seed, key(Stream::shuffle)});
                const auto perm = rng.permutation(static_cast<std::uint32_t>(labels.size()));
                for (std::size_t j = 0; j < labels.size(); ++j)
                    labels[j] = ytr[perm[j]];
            }
            const auto run = train_head(xtr, labels, cfg);
            const std::string head_name = "head_" + to_string(mode) + "_seed" + std::to_string(cfg.seed) + ".snet";
            save_head(common.out / head_name, run.head);
            manifest.add_output(head_name);
            const auto report = evaluate_head(run.head, xte, yte);
            double m[3];
            if (task == HeadTask::regression) {
                m[0] = report.regression.mae;
                m[1] = report.regression.rmse;
                m[2] = report.regression.r2;
            } else {
                m[0] = report.classification.accuracy;
                m[1] = report.classification.f1;
                m[2] = report.classification.auroc.value_or(std::nan(""));
            }
            tsv << to_string(mode) << "\t" << cfg.seed;
            for (int c = 0; c < 3; ++c) {
                cols[c].values.push_back(m[c]);
                char buf[32];
                std::snprintf(buf, sizeof buf, "\t%.9g", m[c]);
                tsv << buf;
            }
            tsv << "\n";
        }
        std::snprintf(line, sizeof line, "%-10s %-20s %-20s %-20s\n", to_string(mode).c_str(),
                      mean_std(cols[0].values).c_str(), mean_std(cols[1].values).c_str(),
                      mean_std(cols[2].values).c_str());
        table << line;
    }
    write_text(common.out / "metrics.tsv", tsv.str());
    manifest.add_output("metrics.tsv");
    std::cout << table.str();
    manifest.finish(all_encoded);
    return all_encoded ? kExitOk : kExitFailure;
}

int cmd_gradcheck(const CommonArgs& common, const GradcheckArgs& opts)
{
    make_dir(common.out);
    RunManifest manifest("gradcheck", common.arguments, common.out);
    manifest.set_seed("seed", opts.seed);
    sinevid::GradcheckOptions go;
    go.trials = opts.trials;
    go.seed = opts.seed;
    go.step = opts.step;
    const GradcheckReport report = gradcheck_model(go);

    std::ostringstream out;
    char line[160];
    for (const auto& g : report.groups) {
        std::snprintf(line, sizeof line, "%-12s max_rel_error=%.3e max_entry_error=%.3e\n", g.name.c_str(),
                      g.max_rel_error, g.max_entry_error);
        out << line;
    }
    const bool ok = report.max_rel_error < opts.tolerance;
    std::snprintf(line, sizeof line, "trials=%zu entries=%zu max_rel_error=%.3e tolerance=%.1e %s\n",
                  report.trials, report.checked, report.max_rel_error, opts.tolerance, ok ? "PASS" : "FAIL");
    out << line;
    write_text(common.out / "gradcheck.txt", out.str());
    manifest.add_output("gradcheck.txt");
    if (!ok)
        manifest.add_failure("gradcheck", "max relative error above tolerance");
    manifest.finish(ok);
    std::cout << out.str();
    return ok ? kExitOk : kExitFailure;
}

} // namespace sinevid::cli
