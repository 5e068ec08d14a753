#include "sinevid/siren.hpp"

#include "sinevid/errors.hpp"
#include "sinevid/kernels.hpp"

#include <cmath>

namespace sinevid {

void ModelDims::validate() const
{
    if (layers < 1 || hidden < 1 || video_dim < 1 || frame_dim < 1)
        throw ContractError("model dims must be >= 1 (K=" + std::to_string(layers) + ", l=" +
                            std::to_string(hidden) + ", s=" + std::to_string(video_dim) +
                            ", r=" + std::to_string(frame_dim) + ")");
    if (!(omega0 > 0.0) || !std::isfinite(omega0))
        throw ContractError("omega0 must be positive and finite");
}

namespace {

template <class T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng)
{
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values())
        v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

void expect_shape(const Shape& got, const Shape& want, const std::string& name)
{
    if (got != want)
        throw DimensionError(name + " has shape " + shape_string(got) + ", expected " + shape_string(want));
}

} // namespace

template <class T>
MetaModel<T> MetaModel<T>::initialize(const ModelDims& dims, std::uint64_t seed)
{
    dims.validate();
    Rng rng({seed, key(Stream::init)});
    MetaModel m;
    m.dims = dims;
    const double w0 = dims.omega0;
    const auto l = dims.hidden;
    for (std::size_t k = 0; k < dims.layers; ++k) {
        const std::size_t fan_in = k == 0 ? 2 : l;
        const double bound = k == 0 ? 1.0 / static_cast<double>(fan_in)
                                    : std::sqrt(6.0 / static_cast<double>(fan_in)) / w0;
        m.weights.push_back(uniform_tensor<T>({l, fan_in}, bound, rng));
        m.biases.push_back(uniform_tensor<T>({1, l}, bound, rng));
        m.frame_projections.push_back(
            uniform_tensor<T>({l, dims.frame_dim}, std::sqrt(6.0 / static_cast<double>(dims.frame_dim)) / w0, rng));
        m.video_projections.push_back(
            uniform_tensor<T>({l, dims.video_dim}, std::sqrt(6.0 / static_cast<double>(dims.video_dim)) / w0, rng));
    }
    m.out_weight = uniform_tensor<T>({1, l}, std::sqrt(6.0 / static_cast<double>(l)), rng);
    m.out_bias = Tensor<T>({1, 1});
    return m;
}

template <class T>
MetaModel<T> MetaModel<T>::zeros(const ModelDims& dims)
{
    dims.validate();
    MetaModel m;
    m.dims = dims;
    const auto l = dims.hidden;
    for (std::size_t k = 0; k < dims.layers; ++k) {
        m.weights.emplace_back(Shape{l, k == 0 ? std::size_t{2} : l});
        m.biases.emplace_back(Shape{1, l});
        m.frame_projections.emplace_back(Shape{l, dims.frame_dim});
        m.video_projections.emplace_back(Shape{l, dims.video_dim});
    }
    m.out_weight = Tensor<T>({1, l});
    m.out_bias = Tensor<T>({1, 1});
    return m;
}

template <class T>
std::vector<Tensor<T>*> MetaModel<T>::parameters()
{
    std::vector<Tensor<T>*> out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out.push_back(&weights[k]);
        out.push_back(&biases[k]);
        out.push_back(&frame_projections[k]);
        out.push_back(&video_projections[k]);
    }
    out.push_back(&out_weight);
    out.push_back(&out_bias);
    return out;
}

template <class T>
std::vector<const Tensor<T>*> MetaModel<T>::parameters() const
{
    auto mut = const_cast<MetaModel*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

template <class T>
std::vector<std::string> MetaModel<T>::parameter_names() const
{
    std::vector<std::string> names;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const auto s = std::to_string(k);
        names.push_back("layer" + s + ".weight");
        names.push_back("layer" + s + ".bias");
        names.push_back("layer" + s + ".frame_projection");
        names.push_back("layer" + s + ".video_projection");
    }
    names.push_back("out.weight");
    names.push_back("out.bias");
    return names;
}

template <class T>
std::size_t MetaModel<T>::parameter_count() const
{
    std::size_t n = 0;
    for (const auto* p : parameters())
        n += p->size();
    return n;
}

template <class T>
void MetaModel<T>::check_consistent() const
{
    dims.validate();
    const auto K = dims.layers;
    const auto l = dims.hidden;
    if (weights.size() != K || biases.size() != K || frame_projections.size() != K || video_projections.size() != K)
        throw DimensionError("model holds " + std::to_string(weights.size()) + " layers, expected " +
                             std::to_string(K));
    for (std::size_t k = 0; k < K; ++k) {
        const auto s = std::to_string(k);
        expect_shape(weights[k].shape(), {l, k == 0 ? std::size_t{2} : l}, "layer" + s + ".weight");
        expect_shape(biases[k].shape(), {1, l}, "layer" + s + ".bias");
        expect_shape(frame_projections[k].shape(), {l, dims.frame_dim}, "layer" + s + ".frame_projection");
        expect_shape(video_projections[k].shape(), {l, dims.video_dim}, "layer" + s + ".video_projection");
    }
    expect_shape(out_weight.shape(), {1, l}, "out.weight");
    expect_shape(out_bias.shape(), {1, 1}, "out.bias");
}

template <class T>
Tensor<T> FrameModulations<T>::row(std::size_t t) const
{
    const auto r = dim();
    if (t >= frames())
        throw ContractError("frame index " + std::to_string(t) + " out of range");
    return Tensor<T>({1, r}, std::vector<T>(values.data() + t * r, values.data() + (t + 1) * r));
}

template <class T>
T normalized_coordinate(std::size_t index, std::size_t extent)
{
    if (extent <= 1)
        return T(0);
    return static_cast<T>(2.0 * static_cast<double>(index) / static_cast<double>(extent - 1) - 1.0);
}

template <class T>
CoordinateSet<T> CoordinateSet<T>::from_pixels(std::size_t h, std::size_t w, std::vector<std::uint32_t> pixels)
{
    if (pixels.empty())
        throw ContractError("coordinate set must be non-empty");
    CoordinateSet c;
    c.height = h;
    c.width = w;
    c.xy = Tensor<T>({pixels.size(), 2});
    for (std::size_t n = 0; n < pixels.size(); ++n) {
        if (pixels[n] >= h * w)
            throw ContractError("pixel index out of range");
        c.xy.at(n, 0) = normalized_coordinate<T>(pixels[n] % w, w);
        c.xy.at(n, 1) = normalized_coordinate<T>(pixels[n] / w, h);
    }
    c.pixels = std::move(pixels);
    return c;
}

template <class T>
CoordinateSet<T> CoordinateSet<T>::full_grid(std::size_t h, std::size_t w)
{
    std::vector<std::uint32_t> pixels(h * w);
    for (std::uint32_t i = 0; i < pixels.size(); ++i)
        pixels[i] = i;
    return from_pixels(h, w, std::move(pixels));
}

template <class T>
CoordinateSet<T> sample_coords(std::size_t h, std::size_t w, std::size_t n, Rng& rng)
{
    const std::size_t total = h * w;
    if (n < 1 || n > total)
        throw ContractError("sample_coords: N=" + std::to_string(n) + " outside [1, " + std::to_string(total) + "]");
    if (n == total)
        return CoordinateSet<T>::full_grid(h, w);
    return CoordinateSet<T>::from_pixels(
        h, w, rng.sample_without_replacement(static_cast<std::uint32_t>(total), static_cast<std::uint32_t>(n)));
}

std::vector<Var> ModelVars::all() const
{
    std::vector<Var> out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out.push_back(weights[k]);
        out.push_back(biases[k]);
        out.push_back(frame_projections[k]);
        out.push_back(video_projections[k]);
    }
    out.push_back(out_weight);
    out.push_back(out_bias);
    return out;
}

template <class T>
ModelVars bind_model(Tape<T>& tape, const MetaModel<T>& model, bool requires_grad)
{
    ModelVars vars;
    for (std::size_t k = 0; k < model.weights.size(); ++k) {
        vars.weights.push_back(tape.leaf_ref(model.weights[k], requires_grad));
        vars.biases.push_back(tape.leaf_ref(model.biases[k], requires_grad));
        vars.frame_projections.push_back(tape.leaf_ref(model.frame_projections[k], requires_grad));
        vars.video_projections.push_back(tape.leaf_ref(model.video_projections[k], requires_grad));
    }
    vars.out_weight = tape.leaf_ref(model.out_weight, requires_grad);
    vars.out_bias = tape.leaf_ref(model.out_bias, requires_grad);
    return vars;
}

template <class T>
Var forward_graph(Tape<T>& tape, const ModelDims& dims, const ModelVars& params, Var coords, Var video,
                  Var frames)
{
    const Tensor<T>& xy = tape.value(coords);
    const std::size_t n_frames = tape.value(frames).rows();
    if (xy.cols() != 2 || xy.rank() != 2)
        throw DimensionError("coordinates must be [N x 2], got " + shape_string(xy.shape()));
    if (tape.value(video).cols() != dims.video_dim || tape.value(video).rows() != 1)
        throw DimensionError("video modulation has shape " + shape_string(tape.value(video).shape()) +
                             ", expected [1x" + std::to_string(dims.video_dim) + "]");
    if (tape.value(frames).cols() != dims.frame_dim)
        throw DimensionError("frame modulations have shape " + shape_string(tape.value(frames).shape()) +
                             ", expected [Fx" + std::to_string(dims.frame_dim) + "]");

    Var h = coords;
    if (n_frames > 1) {
        const std::size_t n = xy.rows();
        Tensor<T> tiled({n_frames * n, 2});
        for (std::size_t f = 0; f < n_frames; ++f)
            std::copy(xy.data(), xy.data() + 2 * n, tiled.data() + f * 2 * n);
        h = tape.leaf(std::move(tiled));
    }

    const T omega0 = static_cast<T>(dims.omega0);
    for (std::size_t k = 0; k < dims.layers; ++k) {
        const Var pre = tape.matmul_bt(h, params.weights[k]);
        const Var video_shift = tape.add_rows(tape.matmul_bt(video, params.video_projections[k]), params.biases[k]);
        const Var shift = tape.add_rows(tape.matmul_bt(frames, params.frame_projections[k]), video_shift);
        h = tape.sine(tape.add_rows(pre, shift), omega0);
    }
    return tape.add_rows(tape.matmul_bt(h, params.out_weight), params.out_bias);
}

template <class T>
Tensor<T> forward_frames(const MetaModel<T>& model, const VideoModulation<T>& v, const FrameModulations<T>& phis,
                         const CoordinateSet<T>& coords)
{
    if (coords.count() == 0)
        throw ContractError("forward: empty coordinate set");
    Tape<T> tape;
    const ModelVars params = bind_model(tape, model, false);
    const Var out = forward_graph(tape, model.dims, params, tape.leaf_ref(coords.xy), tape.leaf_ref(v.values),
                                  tape.leaf_ref(phis.values));
    return tape.value(out).reshaped({phis.frames(), coords.count()});
}

template <class T>
Tensor<T> forward_frame(const MetaModel<T>& model, const VideoModulation<T>& v, const Tensor<T>& phi,
                        const CoordinateSet<T>& coords)
{
    if (phi.size() != model.dims.frame_dim)
        throw DimensionError("frame modulation has length " + std::to_string(phi.size()) + ", expected " +
                             std::to_string(model.dims.frame_dim));
    const FrameModulations<T> one{phi.reshaped({1, phi.size()})};
    return forward_frames(model, v, one, coords).reshaped({coords.count()});
}

template <class T>
T loss_mse_frame(const Tensor<T>& pred, const Tensor<T>& target)
{
    if (pred.size() != target.size())
        throw DimensionError("loss: prediction length " + std::to_string(pred.size()) + " vs target length " +
                             std::to_string(target.size()));
    if (pred.size() == 0)
        throw ContractError("loss: need at least one coordinate");
    const T total = kernels::squared_distance(static_cast<kernels::index_t>(pred.size()), pred.data(), target.data());
    return total / static_cast<T>(pred.size());
}

#define SINEVID_INSTANTIATE(T)                                                                                  \
    template struct MetaModel<T>;                                                                               \
    template struct FrameModulations<T>;                                                                        \
    template struct CoordinateSet<T>;                                                                           \
    template T normalized_coordinate<T>(std::size_t, std::size_t);                                              \
    template CoordinateSet<T> sample_coords<T>(std::size_t, std::size_t, std::size_t, Rng&);                   \
    template ModelVars bind_model<T>(Tape<T>&, const MetaModel<T>&, bool);                                      \
    template Var forward_graph<T>(Tape<T>&, const ModelDims&, const ModelVars&, Var, Var, Var);                 \
    template Tensor<T> forward_frames<T>(const MetaModel<T>&, const VideoModulation<T>&,                        \
                                         const FrameModulations<T>&, const CoordinateSet<T>&);                  \
    template Tensor<T> forward_frame<T>(const MetaModel<T>&, const VideoModulation<T>&, const Tensor<T>&,       \
                                        const CoordinateSet<T>&);                                               \
    template T loss_mse_frame<T>(const Tensor<T>&, const Tensor<T>&);

SINEVID_INSTANTIATE(float)
SINEVID_INSTANTIATE(double)
#undef SINEVID_INSTANTIATE

} // namespace sinevid
