#pragma once

// The modulated sine network. Every hidden layer k computes
//
//   a_k     = W_k h_k + b_k + P2_k v + P1_k phi_t
//   h_{k+1} = sin(omega0 * a_k)
//
// with h_0 = (x, y), followed by a linear read-out z = W_out h_K + b_out.
// The projections P1_k (frame) and P2_k (video) carry no bias, so zero
// modulations leave the shared network untouched.

#include "sinevid/autodiff.hpp"
#include "sinevid/random.hpp"
#include "sinevid/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sinevid {

struct ModelDims {
    std::size_t layers = 10;     // K
    std::size_t hidden = 256;    // l
    std::size_t video_dim = 2048; // s
    std::size_t frame_dim = 512;  // r
    double omega0 = 30.0;

    void validate() const;
    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

template <class T>
struct MetaModel {
    ModelDims dims;
    std::vector<Tensor<T>> weights;           // K x [l x in], in = 2 for k = 0
    std::vector<Tensor<T>> biases;            // K x [1 x l]
    std::vector<Tensor<T>> frame_projections; // K x [l x r]
    std::vector<Tensor<T>> video_projections; // K x [l x s]
    Tensor<T> out_weight;                     // [1 x l]
    Tensor<T> out_bias;                       // [1 x 1]

    // Sine-network initialization: first layer U(+-1/fan_in), hidden layers
    // and projections U(+-sqrt(6/fan_in)/omega0), read-out U(+-sqrt(6/fan_in)).
    static MetaModel initialize(const ModelDims& dims, std::uint64_t seed);
    static MetaModel zeros(const ModelDims& dims);

    // Declared order: per layer W_k, b_k, P1_k, P2_k; then W_out, b_out.
    std::vector<Tensor<T>*> parameters();
    std::vector<const Tensor<T>*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::size_t parameter_count() const;

    template <class U>
    MetaModel<U> cast() const
    {
        MetaModel<U> out;
        out.dims = dims;
        auto conv = [](const std::vector<Tensor<T>>& src) {
            std::vector<Tensor<U>> dst;
            for (const auto& t : src)
                dst.push_back(t.template cast<U>());
            return dst;
        };
        out.weights = conv(weights);
        out.biases = conv(biases);
        out.frame_projections = conv(frame_projections);
        out.video_projections = conv(video_projections);
        out.out_weight = out_weight.template cast<U>();
        out.out_bias = out_bias.template cast<U>();
        return out;
    }

    // Throws DimensionError if any tensor disagrees with `dims`.
    void check_consistent() const;
};

// v: one row of length s.
template <class T>
struct VideoModulation {
    Tensor<T> values;

    static VideoModulation zeros(std::size_t s) { return {Tensor<T>({1, s})}; }
    std::size_t dim() const noexcept { return values.cols(); }
};

// phi_1..phi_T stacked as rows of a [T x r] matrix.
template <class T>
struct FrameModulations {
    Tensor<T> values;

    static FrameModulations zeros(std::size_t frames, std::size_t r) { return {Tensor<T>({frames, r})}; }
    std::size_t frames() const noexcept { return values.rows(); }
    std::size_t dim() const noexcept { return values.cols(); }
    Tensor<T> row(std::size_t t) const;
};

// A set of pixel positions of an h x w frame and their normalized (x, y).
// Pixel (i, j) maps to x = 2j/(w-1) - 1, y = 2i/(h-1) - 1; an axis of
// extent 1 maps to 0.
template <class T>
struct CoordinateSet {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint32_t> pixels; // row-major pixel index i * w + j
    Tensor<T> xy;                      // [N x 2]

    std::size_t count() const noexcept { return pixels.size(); }

    static CoordinateSet full_grid(std::size_t h, std::size_t w);
    static CoordinateSet from_pixels(std::size_t h, std::size_t w, std::vector<std::uint32_t> pixels);
};

template <class T>
T normalized_coordinate(std::size_t index, std::size_t extent);

// N distinct pixels uniformly without replacement; N == h*w gives the full
// grid in row-major order. Throws ContractError unless 1 <= N <= h*w.
template <class T>
CoordinateSet<T> sample_coords(std::size_t h, std::size_t w, std::size_t n, Rng& rng);

// The model's parameters recorded as tape leaves (borrowed, not copied).
struct ModelVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
    std::vector<Var> frame_projections;
    std::vector<Var> video_projections;
    Var out_weight;
    Var out_bias;

    std::vector<Var> all() const; // declared parameter order
};

template <class T>
ModelVars bind_model(Tape<T>& tape, const MetaModel<T>& model, bool requires_grad);

// Records the forward pass for F frames that share one coordinate list.
// coords: [N x 2], video: [1 x s], frames: [F x r]. Result: [F*N x 1],
// frame-major.
template <class T>
Var forward_graph(Tape<T>& tape, const ModelDims& dims, const ModelVars& params, Var coords, Var video,
                  Var frames);

// Predicted z for one frame at the given coordinates; [N].
template <class T>
Tensor<T> forward_frame(const MetaModel<T>& model, const VideoModulation<T>& v, const Tensor<T>& phi,
                        const CoordinateSet<T>& coords);

// Predictions for several frames at once; [F x N].
template <class T>
Tensor<T> forward_frames(const MetaModel<T>& model, const VideoModulation<T>& v,
                         const FrameModulations<T>& phis, const CoordinateSet<T>& coords);

// (1/N) sum_i (pred_i - target_i)^2.
template <class T>
T loss_mse_frame(const Tensor<T>& pred, const Tensor<T>& target);

} // namespace sinevid
