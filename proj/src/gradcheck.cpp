#include "sinevid/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace sinevid {

double relative_error(std::span<const double> analytic, std::span<const double> numeric)
{
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double scale = std::sqrt(std::max(na, nn));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

double entry_error(double analytic, double numeric)
{
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

namespace {

struct Problem {
    MetaModel<double> model;
    Tensor<double> video;
    Tensor<double> frames;
    Tensor<double> coords;
    Tensor<double> targets;
};

double loss_value(const Problem& p)
{
    Tape<double> tape;
    const ModelVars params = bind_model(tape, p.model, false);
    const Var out = forward_graph(tape, p.model.dims, params, tape.leaf_ref(p.coords), tape.leaf_ref(p.video),
                                  tape.leaf_ref(p.frames));
    return tape.value(tape.mse(out, tape.leaf_ref(p.targets))).item();
}

} // namespace

GradcheckReport gradcheck_model(const GradcheckOptions& opts)
{
    opts.dims.validate();
    GradcheckReport report;
    report.trials = opts.trials;
    for (const auto& name : MetaModel<double>::zeros(opts.dims).parameter_names())
        report.groups.push_back({name, 0.0});
    report.groups.push_back({"v", 0.0});
    report.groups.push_back({"phi", 0.0});

    for (std::size_t trial = 0; trial < opts.trials; ++trial) {
        Rng rng({opts.seed, key(Stream::init), trial});
        Problem p{MetaModel<double>::initialize(opts.dims, rng.next()),
                  Tensor<double>({1, opts.dims.video_dim}),
                  Tensor<double>({opts.frames, opts.dims.frame_dim}),
                  Tensor<double>({opts.coords, 2}),
                  Tensor<double>({opts.frames * opts.coords, 1})};
        for (double& x : p.video.storage())
            x = rng.uniform(-1.0, 1.0);
        for (double& x : p.frames.storage())
            x = rng.uniform(-1.0, 1.0);
        for (double& x : p.coords.storage())
            x = rng.uniform(-1.0, 1.0);
        for (double& x : p.targets.storage())
            x = rng.uniform();

        std::vector<Tensor<double>*> tensors = p.model.parameters();
        tensors.push_back(&p.video);
        tensors.push_back(&p.frames);

        std::vector<Tensor<double>> grads;
        {
            Tape<double> tape;
            const ModelVars params = bind_model(tape, p.model, true);
            const Var v = tape.leaf_ref(p.video, true);
            const Var phi = tape.leaf_ref(p.frames, true);
            const Var out = forward_graph(tape, p.model.dims, params, tape.leaf_ref(p.coords), v, phi);
            std::vector<Var> wrt = params.all();
            wrt.push_back(v);
            wrt.push_back(phi);
            grads = tape.backward(tape.mse(out, tape.leaf_ref(p.targets)), wrt);
        }

        for (std::size_t g = 0; g < tensors.size(); ++g) {
            Tensor<double>& t = *tensors[g];
            std::vector<double> numerics(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double saved = t[i];
                t[i] = saved + opts.step;
                const double up = loss_value(p);
                t[i] = saved - opts.step;
                const double down = loss_value(p);
                t[i] = saved;
                numerics[i] = (up - down) / (2.0 * opts.step);
                const double e = entry_error(grads[g][i], numerics[i]);
                report.groups[g].max_entry_error = std::max(report.groups[g].max_entry_error, e);
                report.max_entry_error = std::max(report.max_entry_error, e);
                ++report.checked;
            }
            const double err = relative_error(grads[g].values(), numerics);
            report.groups[g].max_rel_error = std::max(report.groups[g].max_rel_error, err);
            report.max_rel_error = std::max(report.max_rel_error, err);
        }
    }
    return report;
}

} // namespace sinevid
