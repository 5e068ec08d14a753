#include "sinevid/downstream.hpp"

#include "sinevid/autodiff.hpp"
#include "sinevid/errors.hpp"
#include "sinevid/random.hpp"

#include <algorithm>
#include <cmath>

namespace sinevid {

std::string to_string(FeatureMode m)
{
    switch (m) {
    case FeatureMode::video:
        return "v";
    case FeatureMode::frames:
        return "phi";
    case FeatureMode::combined:
        return "combined";
    }
    return "?";
}

std::string to_string(HeadTask t) { return t == HeadTask::binary ? "binary" : "regression"; }

FeatureMode parse_feature_mode(const std::string& s)
{
    if (s == "v")
        return FeatureMode::video;
    if (s == "phi")
        return FeatureMode::frames;
    if (s == "combined")
        return FeatureMode::combined;
    throw ConfigError("unknown feature mode '" + s + "' (expected v, phi or combined)");
}

HeadTask parse_head_task(const std::string& s)
{
    if (s == "regression")
        return HeadTask::regression;
    if (s == "binary")
        return HeadTask::binary;
    throw ConfigError("unknown head task '" + s + "' (expected regression or binary)");
}

void HeadConfig::validate() const
{
    for (std::size_t w : hidden)
        if (w < 1)
            throw ContractError("head: hidden widths must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ContractError("head: dropout must lie in [0, 1)");
    if (batch_size < 1)
        throw ContractError("head: batch_size must be >= 1");
    if (!(std::isfinite(lr) && lr >= 0.0))
        throw ContractError("head: lr must be finite and >= 0");
}

std::vector<double> extract_features(const VideoEncoding<float>& enc, FeatureMode mode)
{
    std::vector<double> out;
    if (mode == FeatureMode::video || mode == FeatureMode::combined)
        for (float x : enc.video.values.values())
            out.push_back(x);
    if (mode == FeatureMode::frames || mode == FeatureMode::combined) {
        const std::size_t T = enc.frames.frames(), r = enc.frames.dim();
        std::vector<double> pooled(r, 0.0);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < r; ++j)
                pooled[j] += enc.frames.values.at(t, j);
        for (double& p : pooled)
            p /= static_cast<double>(T);
        out.insert(out.end(), pooled.begin(), pooled.end());
    }
    return out;
}

namespace {

void check_samples(const std::vector<std::vector<double>>& features, const std::vector<double>& labels,
                   std::size_t dim, const char* what)
{
    if (features.size() != labels.size())
        throw DimensionError(std::string(what) + ": " + std::to_string(features.size()) + " feature rows vs " +
                             std::to_string(labels.size()) + " labels");
    for (const auto& row : features)
        if (row.size() != dim)
            throw DimensionError(std::string(what) + ": feature length " + std::to_string(row.size()) +
                                 ", expected " + std::to_string(dim));
}

std::vector<double> standardize(const Head& head, const std::vector<double>& row)
{
    std::vector<double> x(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        x[j] = (row[j] - head.feature_mean[j]) / head.feature_scale[j];
    return x;
}

struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> m, v;

    explicit Adam(double rate, const std::vector<Tensor<double>*>& params) : lr(rate)
    {
        for (const auto* p : params) {
            m.emplace_back(p->size(), 0.0);
            v.emplace_back(p->size(), 0.0);
        }
    }

    void apply(const std::vector<Tensor<double>*>& params, const std::vector<Tensor<double>>& grads)
    {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < params.size(); ++i) {
            double* p = params[i]->data();
            const double* g = grads[i].data();
            for (std::size_t j = 0; j < params[i]->size(); ++j) {
                m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
                v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
                p[j] -= lr * (m[i][j] / c1) / (std::sqrt(v[i][j] / c2) + eps);
            }
        }
    }
};

} // namespace

std::vector<double> Head::predict(const std::vector<std::vector<double>>& features) const
{
    check_samples(features, std::vector<double>(features.size()), input_dim(), "head predict");
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& row : features) {
        std::vector<double> h = standardize(*this, row);
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const Tensor<float>& W = weights[k];
            std::vector<double> next(W.rows());
            for (std::size_t o = 0; o < W.rows(); ++o) {
                double acc = biases[k][o];
                for (std::size_t i = 0; i < W.cols(); ++i)
                    acc += static_cast<double>(W.at(o, i)) * h[i];
                next[o] = k + 1 < weights.size() ? std::max(acc, 0.0) : acc;
            }
            h = std::move(next);
        }
        const double z = h[0];
        out.push_back(task == HeadTask::binary ? 1.0 / (1.0 + std::exp(-z)) : z * target_scale + target_mean);
    }
    return out;
}

HeadTraining train_head(const std::vector<std::vector<double>>& features, const std::vector<double>& labels,
                        const HeadConfig& cfg)
{
    cfg.validate();
    if (features.size() < 2)
        throw ContractError("head: training needs at least 2 samples");
    const std::size_t n = features.size(), d = features.front().size();
    if (d == 0)
        throw DimensionError("head: empty feature vectors");
    check_samples(features, labels, d, "train_head");
    if (cfg.task == HeadTask::binary) {
        bool pos = false, neg = false;
        for (double y : labels) {
            if (y != 0.0 && y != 1.0)
                throw ContractError("head: binary labels must be 0 or 1");
            (y == 1.0 ? pos : neg) = true;
        }
        if (!pos || !neg)
            throw ContractError("head: binary training needs both classes");
    }

    HeadTraining result;
    Head& head = result.head;
    head.mode = cfg.mode;
    head.task = cfg.task;

    // Population statistics; constant features keep unit scale.
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (const auto& row : features)
        for (std::size_t j = 0; j < d; ++j)
            mean[j] += row[j];
    for (double& m : mean)
        m /= static_cast<double>(n);
    for (const auto& row : features)
        for (std::size_t j = 0; j < d; ++j)
            scale[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    for (double& s : scale) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 0.0))
            s = 1.0;
    }
    for (std::size_t j = 0; j < d; ++j) {
        head.feature_mean.push_back(static_cast<float>(mean[j]));
        head.feature_scale.push_back(static_cast<float>(scale[j]));
    }
    if (cfg.task == HeadTask::regression) {
        double ym = 0.0, ys = 0.0;
        for (double y : labels)
            ym += y;
        ym /= static_cast<double>(n);
        for (double y : labels)
            ys += (y - ym) * (y - ym);
        ys = std::sqrt(ys / static_cast<double>(n));
        head.target_mean = static_cast<float>(ym);
        head.target_scale = ys > 0.0 ? static_cast<float>(ys) : 1.0f;
    }

    std::vector<std::size_t> widths{d};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(1);
    std::vector<Tensor<double>> W, B;
    Rng init({cfg.seed, key(Stream::head)});
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
        Tensor<double> w({widths[k + 1], widths[k]});
        Tensor<double> b({1, widths[k + 1]});
        for (double& x : w.storage())
            x = init.uniform(-bound, bound);
        for (double& x : b.storage())
            x = init.uniform(-bound, bound);
        W.push_back(std::move(w));
        B.push_back(std::move(b));
    }
    std::vector<Tensor<double>*> params;
    for (std::size_t k = 0; k < W.size(); ++k) {
        params.push_back(&W[k]);
        params.push_back(&B[k]);
    }
    Adam opt(cfg.lr, params);

    // Standardized design matrix and targets.
    std::vector<double> X(n * d), Y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            X[i * d + j] = (features[i][j] - head.feature_mean[j]) / head.feature_scale[j];
        Y[i] = cfg.task == HeadTask::regression ? (labels[i] - head.target_mean) / head.target_scale : labels[i];
    }

    const double keep = 1.0 - cfg.dropout;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle({cfg.seed, key(Stream::shuffle), epoch});
        Rng drop({cfg.seed, key(Stream::dropout), epoch});
        const auto order = shuffle.permutation(static_cast<std::uint32_t>(n));
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t m = std::min(cfg.batch_size, n - start);
            Tensor<double> xb({m, d}), yb({m, 1});
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(&X[src * d], d, xb.data() + i * d);
                yb[i] = Y[src];
            }
            Tape<double> tape;
            std::vector<Var> pv;
            for (auto* p : params)
                pv.push_back(tape.leaf_ref(*p, true));
            Var h = tape.leaf(std::move(xb));
            try {
                for (std::size_t k = 0; k < W.size(); ++k) {
                    h = tape.add_rows(tape.matmul_bt(h, pv[2 * k]), pv[2 * k + 1]);
                    if (k + 1 == W.size())
                        break;
                    h = tape.relu(h);
                    if (cfg.dropout > 0.0) {
                        Tensor<double> mask({m, widths[k + 1]});
                        for (double& x : mask.storage())
                            x = drop.uniform() < keep ? 1.0 / keep : 0.0;
                        h = tape.mul(h, tape.leaf(std::move(mask)));
                    }
                }
                const Var target = tape.leaf(std::move(yb));
                const Var loss = cfg.task == HeadTask::binary ? tape.bce_with_logits(h, target) : tape.mse(h, target);
                loss_sum += tape.value(loss).item();
                opt.apply(params, tape.backward(loss, pv));
            } catch (const NonFiniteError& e) {
                result.epoch_loss.push_back(std::nan(""));
                throw DivergenceError(std::string("head training diverged in epoch ") + std::to_string(epoch) +
                                          ": " + e.what(),
                                      epoch, result.epoch_loss);
            }
            ++batches;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    }

    for (std::size_t k = 0; k < W.size(); ++k) {
        head.weights.push_back(W[k].cast<float>());
        head.biases.push_back(B[k].cast<float>());
    }
    return result;
}

HeadReport evaluate_head(const Head& head, const std::vector<std::vector<double>>& features,
                         const std::vector<double>& labels)
{
    if (features.empty())
        throw ContractError("evaluate_head: empty evaluation set");
    check_samples(features, labels, head.input_dim(), "evaluate_head");
    const std::vector<double> pred = head.predict(features);
    HeadReport report;
    report.task = head.task;
    if (head.task == HeadTask::regression) {
        report.regression = regression_metrics(pred, labels);
    } else {
        std::vector<int> y;
        for (double l : labels)
            y.push_back(l >= 0.5 ? 1 : 0);
        report.classification = classification_metrics(pred, y);
    }
    return report;
}

Bytes serialize_head(const Head& head)
{
    ByteWriter out;
    out.u32(static_cast<std::uint32_t>(ContainerKind::downstream_head));
    out.u32(static_cast<std::uint32_t>(head.mode));
    out.u32(static_cast<std::uint32_t>(head.task));
    out.u32(static_cast<std::uint32_t>(head.input_dim()));
    out.f32s(head.feature_mean);
    out.f32s(head.feature_scale);
    out.f32(head.target_mean);
    out.f32(head.target_scale);
    out.u32(static_cast<std::uint32_t>(head.weights.size()));
    for (std::size_t k = 0; k < head.weights.size(); ++k) {
        out.u32(static_cast<std::uint32_t>(head.weights[k].rows()));
        out.u32(static_cast<std::uint32_t>(head.weights[k].cols()));
        out.f32s(head.weights[k].values());
        out.f32s(head.biases[k].values());
    }
    return wrap_container("SNET", out.bytes());
}

Head deserialize_head(std::span<const std::uint8_t> file)
{
    const Bytes payload = unwrap_container("SNET", file, "downstream head");
    ByteReader in(payload);
    const auto kind = in.u32();
    if (kind != static_cast<std::uint32_t>(ContainerKind::downstream_head))
        throw FormatError("downstream head: container holds kind " + std::to_string(kind) + ", not a head");
    Head head;
    const auto mode = in.u32();
    const auto task = in.u32();
    if (mode < 1 || mode > 3 || task < 1 || task > 2)
        throw FormatError("downstream head: unknown mode or task tag");
    head.mode = static_cast<FeatureMode>(mode);
    head.task = static_cast<HeadTask>(task);
    const std::size_t d = in.u32();
    if (d == 0 || d > in.remaining() / 8)
        throw FormatError("downstream head: implausible input dimension " + std::to_string(d));
    head.feature_mean.resize(d);
    head.feature_scale.resize(d);
    in.f32s(head.feature_mean);
    in.f32s(head.feature_scale);
    head.target_mean = in.f32();
    head.target_scale = in.f32();
    const std::size_t layers = in.u32();
    if (layers == 0 || layers > 64)
        throw FormatError("downstream head: implausible layer count " + std::to_string(layers));
    std::size_t expected_in = d;
    for (std::size_t k = 0; k < layers; ++k) {
        const std::size_t rows = in.u32(), cols = in.u32();
        if (cols != expected_in || rows == 0 || (k + 1 == layers && rows != 1) ||
            rows * (cols + 1) > in.remaining() / 4)
            throw FormatError("downstream head: layer " + std::to_string(k) + " has inconsistent shape");
        Tensor<float> w({rows, cols}), b({1, rows});
        in.f32s(w.storage());
        in.f32s(b.storage());
        head.weights.push_back(std::move(w));
        head.biases.push_back(std::move(b));
        expected_in = rows;
    }
    if (in.remaining() != 0)
        throw FormatError("downstream head: trailing bytes in payload");
    return head;
}

void save_head(const std::filesystem::path& path, const Head& head)
{
    write_file_atomic(path, serialize_head(head));
}

Head load_head(const std::filesystem::path& path) { return deserialize_head(read_file(path)); }

} // namespace sinevid
