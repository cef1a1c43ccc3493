#include "cvl/nn/mlp.hpp"

#include <cmath>

#include "cvl/errors.hpp"

namespace cvl::nn {

MLP::MLP(MLPConfig config) : config_(std::move(config)) {
    if (config_.input_dim <= 0 || config_.output_dim <= 0) throw ShapeError("MLP dimensions must be positive");
    Eigen::Index cursor = 0;
    int in = config_.input_dim;
    for (int l = 0; l < num_linear(); ++l) {
        const int out = layer_output_dim(l);
        if (out <= 0) throw ShapeError("MLP layer widths must be positive");
        Offsets off;
        off.weight = cursor;
        cursor += static_cast<Eigen::Index>(out) * in;
        off.bias = cursor;
        cursor += out;
        const bool hidden = l + 1 < num_linear();
        if (hidden && config_.layernorm) {
            off.scale = cursor;
            cursor += out;
            off.shift = cursor;
            cursor += out;
        }
        in_dims_.push_back(in);
        offsets_.push_back(off);
        if (hidden) in = config_.densenet ? out + in : out;
    }
    params_ = Vec::Zero(cursor);
    if (config_.layernorm) {
        for (int l = 0; l + 1 < num_linear(); ++l) ln_scale(l).setOnes();
    }
}

MLP MLP::init(const MLPConfig& config, Rng& rng) {
    MLP net(config);
    for (int l = 0; l < net.num_linear(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_input_dim(l)));
        std::uniform_real_distribution<double> unif(-bound, bound);
        auto w = net.weight(l);
        // Column-major fill order keeps initialisation stable across Eigen versions.
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = unif(rng);
        }
    }
    return net;
}

int MLP::layer_output_dim(int layer) const {
    return layer + 1 < num_linear() ? config_.hidden[layer] : config_.output_dim;
}

Eigen::Map<Mat> MLP::weight(int layer) {
    return {params_.data() + offsets_[layer].weight, layer_output_dim(layer), in_dims_[layer]};
}
Eigen::Map<const Mat> MLP::weight(int layer) const {
    return {params_.data() + offsets_[layer].weight, layer_output_dim(layer), in_dims_[layer]};
}
Eigen::Map<Vec> MLP::bias(int layer) { return {params_.data() + offsets_[layer].bias, layer_output_dim(layer)}; }
Eigen::Map<const Vec> MLP::bias(int layer) const {
    return {params_.data() + offsets_[layer].bias, layer_output_dim(layer)};
}
Eigen::Map<Vec> MLP::ln_scale(int layer) { return {params_.data() + offsets_[layer].scale, layer_output_dim(layer)}; }
Eigen::Map<const Vec> MLP::ln_scale(int layer) const {
    return {params_.data() + offsets_[layer].scale, layer_output_dim(layer)};
}
Eigen::Map<Vec> MLP::ln_shift(int layer) { return {params_.data() + offsets_[layer].shift, layer_output_dim(layer)}; }
Eigen::Map<const Vec> MLP::ln_shift(int layer) const {
    return {params_.data() + offsets_[layer].shift, layer_output_dim(layer)};
}

Mat forward(const MLP& net, const Mat& input, ForwardCache* cache) {
    if (input.rows() != net.config().input_dim) throw ShapeError("MLP input dimension mismatch");
    const int n_hidden = net.num_linear() - 1;
    if (cache != nullptr) {
        cache->inputs.assign(net.num_linear(), Mat());
        cache->normalized.assign(n_hidden, Mat());
        cache->inv_std.assign(n_hidden, Eigen::RowVectorXd());
        cache->pre_relu.assign(n_hidden, Mat());
        cache->batch = input.cols();
    }
    Mat x = input;
    for (int l = 0; l < n_hidden; ++l) {
        Mat z = net.weight(l) * x;
        z.colwise() += net.bias(l);
        Mat y;
        if (net.config().layernorm) {
            const Eigen::RowVectorXd mean = z.colwise().mean();
            z.rowwise() -= mean;
            const Eigen::RowVectorXd inv_std =
                (z.array().square().colwise().mean() + kLayerNormEps).rsqrt().matrix();
            z.array().rowwise() *= inv_std.array();
            y = (z.array().colwise() * net.ln_scale(l).array()).matrix();
            y.colwise() += net.ln_shift(l);
            if (cache != nullptr) {
                cache->normalized[l] = z;
                cache->inv_std[l] = inv_std;
            }
        } else {
            y = std::move(z);
        }
        Mat h = y.cwiseMax(0.0);
        if (cache != nullptr) {
            cache->pre_relu[l] = y;
        }
        Mat next;
        if (net.config().densenet) {
            next.resize(h.rows() + x.rows(), x.cols());
            next.topRows(h.rows()) = h;
            next.bottomRows(x.rows()) = x;
        } else {
            next = std::move(h);
        }
        if (cache != nullptr) cache->inputs[l] = std::move(x);
        x = std::move(next);
    }
    Mat out = net.weight(n_hidden) * x;
    out.colwise() += net.bias(n_hidden);
    if (cache != nullptr) cache->inputs[n_hidden] = std::move(x);
    if (!out.allFinite()) throw NumericalFault("MLP produced a non-finite activation");
    return out;
}

Vec backward(const MLP& net, const ForwardCache& cache, const Mat& output_grad, Mat* input_grad) {
    const int n_hidden = net.num_linear() - 1;
    if (static_cast<int>(cache.inputs.size()) != net.num_linear() || output_grad.cols() != cache.batch ||
        output_grad.rows() != net.config().output_dim || cache.inputs[n_hidden].rows() != net.layer_input_dim(n_hidden)) {
        throw ShapeError("backward: cache does not match network or output gradient");
    }
    MLP grads(net.config());
    grads.params().setZero();

    const Mat& x_out = cache.inputs[n_hidden];
    grads.weight(n_hidden).noalias() = output_grad * x_out.transpose();
    grads.bias(n_hidden) = output_grad.rowwise().sum();
    Mat dx = net.weight(n_hidden).transpose() * output_grad;

    for (int l = n_hidden - 1; l >= 0; --l) {
        const Mat& x = cache.inputs[l];
        const int width = net.layer_output_dim(l);
        Mat dy = dx.topRows(width);
        Mat skip;
        if (net.config().densenet) skip = dx.bottomRows(x.rows());
        dy = (cache.pre_relu[l].array() > 0.0).select(dy, 0.0);

        Mat dz;
        if (net.config().layernorm) {
            const Mat& xhat = cache.normalized[l];
            grads.ln_scale(l) = (dy.array() * xhat.array()).rowwise().sum().matrix();
            grads.ln_shift(l) = dy.rowwise().sum();
            const Mat dxhat = (dy.array().colwise() * net.ln_scale(l).array()).matrix();
            const Eigen::RowVectorXd mean_dxhat = dxhat.colwise().mean();
            const Eigen::RowVectorXd mean_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().mean().matrix();
            dz = dxhat;
            dz.rowwise() -= mean_dxhat;
            dz.array() -= xhat.array().rowwise() * mean_dxhat_xhat.array();
            dz.array().rowwise() *= cache.inv_std[l].array();
        } else {
            dz = std::move(dy);
        }
        grads.weight(l).noalias() = dz * x.transpose();
        grads.bias(l) = dz.rowwise().sum();
        dx = net.weight(l).transpose() * dz;
        if (net.config().densenet) dx += skip;
    }
    if (input_grad != nullptr) *input_grad = std::move(dx);
    return std::move(grads.params());
}

Vec l2_normalize(const Vec& x, bool* degenerate) {
    const double norm = x.norm();
    if (degenerate != nullptr) *degenerate = norm <= kNormEps;
    return x / std::max(norm, kNormEps);
}

Mat l2_normalize_columns(const Mat& x, Eigen::RowVectorXd* norms, int* degenerate) {
    const Eigen::RowVectorXd n = x.colwise().norm();
    Mat out = x;
    int bad = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (n(j) <= kNormEps) ++bad;
        out.col(j) /= std::max(n(j), kNormEps);
    }
    if (norms != nullptr) *norms = n;
    if (degenerate != nullptr) *degenerate = bad;
    return out;
}

Mat l2_normalize_backward(const Mat& normalized, const Eigen::RowVectorXd& norms, const Mat& output_grad) {
    Mat dx(output_grad.rows(), output_grad.cols());
    for (Eigen::Index j = 0; j < output_grad.cols(); ++j) {
        if (norms(j) <= kNormEps) {
            dx.col(j) = output_grad.col(j) / kNormEps;
        } else {
            const auto y = normalized.col(j);
            dx.col(j) = (output_grad.col(j) - y * y.dot(output_grad.col(j))) / norms(j);
        }
    }
    return dx;
}

}  // namespace cvl::nn
