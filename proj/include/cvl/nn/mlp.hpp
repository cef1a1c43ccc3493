#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvl/rng.hpp"

namespace cvl::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct MLPConfig {
    int input_dim = 1;
    std::vector<int> hidden;  // widths of the hidden layers; empty = single linear layer
    int output_dim = 1;
    bool densenet = true;     // feed [h_l; x_l] into layer l+1
    bool layernorm = true;    // LayerNorm between linear layer and ReLU

    bool operator==(const MLPConfig&) const = default;
};

inline constexpr double kLayerNormEps = 1e-5;

/// Dense MLP whose parameters live in a single flat vector so that optimizer
/// state, EMA targets, gradient clipping and checkpoints act on one array.
///
/// Hidden layer l: z = W x + b, y = LayerNorm(z) (optional), h = relu(y),
/// next input = [h; x] with DenseNet wiring or h otherwise. The output layer
/// is linear.
class MLP {
public:
    MLP() = default;
    /// All parameters zero except LayerNorm scales (one).
    explicit MLP(MLPConfig config);
    /// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
    static MLP init(const MLPConfig& config, Rng& rng);

    const MLPConfig& config() const { return config_; }
    int num_linear() const { return static_cast<int>(config_.hidden.size()) + 1; }
    int layer_input_dim(int layer) const { return in_dims_[layer]; }
    int layer_output_dim(int layer) const;

    Vec& params() { return params_; }
    const Vec& params() const { return params_; }
    Eigen::Index num_params() const { return params_.size(); }

    Eigen::Map<Mat> weight(int layer);
    Eigen::Map<const Mat> weight(int layer) const;
    Eigen::Map<Vec> bias(int layer);
    Eigen::Map<const Vec> bias(int layer) const;
    // LayerNorm parameters exist for hidden layers only.
    Eigen::Map<Vec> ln_scale(int layer);
    Eigen::Map<const Vec> ln_scale(int layer) const;
    Eigen::Map<Vec> ln_shift(int layer);
    Eigen::Map<const Vec> ln_shift(int layer) const;

private:
    struct Offsets {
        Eigen::Index weight = 0, bias = 0, scale = 0, shift = 0;
    };

    MLPConfig config_;
    std::vector<int> in_dims_;
    std::vector<Offsets> offsets_;
    Vec params_;
};

/// Activations kept by forward() for the matching backward() call.
struct ForwardCache {
    std::vector<Mat> inputs;      // x_l per linear layer
    std::vector<Mat> normalized;  // (z - mean) * inv_std, hidden layers
    std::vector<Eigen::RowVectorXd> inv_std;
    std::vector<Mat> pre_relu;    // y_l
    Eigen::Index batch = 0;
};

/// Columns of `input` are samples. Throws ShapeError on a dimension mismatch
/// and NumericalFault if any output is non-finite.
Mat forward(const MLP& net, const Mat& input, ForwardCache* cache = nullptr);

/// Gradient of sum(output_grad .* output) with respect to the flat
/// parameters; optionally also with respect to the input.
Vec backward(const MLP& net, const ForwardCache& cache, const Mat& output_grad, Mat* input_grad = nullptr);

/// x / max(||x||, 1e-12). `degenerate` is set when the guard was active.
Vec l2_normalize(const Vec& x, bool* degenerate = nullptr);

inline constexpr double kNormEps = 1e-12;

/// Column-wise l2_normalize. `norms` receives the unguarded column norms.
Mat l2_normalize_columns(const Mat& x, Eigen::RowVectorXd* norms = nullptr, int* degenerate = nullptr);

/// Backward of l2_normalize_columns given its output and input norms.
Mat l2_normalize_backward(const Mat& normalized, const Eigen::RowVectorXd& norms, const Mat& output_grad);

}  // namespace cvl::nn
