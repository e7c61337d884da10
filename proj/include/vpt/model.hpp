// model.hpp -- tubelet-embedding video transformer with 88 sigmoid heads.
//
// Templated on the scalar type: float for training and inference, double for
// finite-difference gradient checking. Forward, loss and backward are written
// against the same parameter struct, and every tensor is reachable through
// tensor_views() so initialization, the optimizer, serialization and the
// gradient check all share one traversal order.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "vpt/rng.hpp"
#include "vpt/util.hpp"

namespace vpt {

struct ModelConfig {
    int frames = 16;    // T
    int res = 224;      // S, square input
    int tubelet = 2;    // temporal patch depth
    int patch = 16;     // spatial patch size
    int dim = 768;      // embedding width
    int layers = 12;
    int heads = 12;
    int channels = 3;

    int tokens() const {
        int grid = res / patch;
        return (frames / tubelet) * grid * grid;
    }
    int tube_len() const { return tubelet * patch * patch * channels; }

    void validate() const {
        if (frames < 1 || res < 1 || tubelet < 1 || patch < 1 || dim < 1 ||
            layers < 1 || heads < 1)
            fail("model config fields must be positive");
        if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
        if (frames % tubelet != 0) fail("frames (", frames, ") not divisible by tubelet depth (", tubelet, ")");
        if (res % patch != 0) fail("resolution (", res, ") not divisible by patch size (", patch, ")");
        if (dim % heads != 0) fail("dim (", dim, ") not divisible by heads (", heads, ")");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr int kHeads88 = 88;  // one output per piano key

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using ColVec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct ModelParams {
    ModelConfig cfg;

    Mat<S> tubelet_w;  // dim x tube_len
    ColVec<S> tubelet_b;
    Mat<S> pos;  // tokens x dim, learned

    struct Block {
        ColVec<S> ln1_g, ln1_b;
        Mat<S> qkv_w;  // 3*dim x dim
        ColVec<S> qkv_b;
        Mat<S> out_w;  // dim x dim
        ColVec<S> out_b;
        ColVec<S> ln2_g, ln2_b;
        Mat<S> fc1_w;  // 4*dim x dim
        ColVec<S> fc1_b;
        Mat<S> fc2_w;  // dim x 4*dim
        ColVec<S> fc2_b;
    };
    std::vector<Block> blocks;

    ColVec<S> lnf_g, lnf_b;
    Mat<S> head_w;  // 88 x dim
    ColVec<S> head_b;
};

template <class S>
struct TensorView {
    std::string name;
    S* data;
    long rows, cols;
    long size() const { return rows * cols; }
};

// Canonical tensor traversal; the order defines the checkpoint layout and the
// initialization draw order.
template <class S>
std::vector<TensorView<S>> tensor_views(ModelParams<S>& p) {
    std::vector<TensorView<S>> out;
    auto add = [&out](const std::string& name, auto& m) {
        out.push_back({name, m.data(), m.rows(), m.cols()});
    };
    add("tubelet.w", p.tubelet_w);
    add("tubelet.b", p.tubelet_b);
    add("pos", p.pos);
    for (std::size_t l = 0; l < p.blocks.size(); ++l) {
        auto& b = p.blocks[l];
        std::string base = "block" + std::to_string(l) + ".";
        add(base + "ln1.g", b.ln1_g);
        add(base + "ln1.b", b.ln1_b);
        add(base + "qkv.w", b.qkv_w);
        add(base + "qkv.b", b.qkv_b);
        add(base + "out.w", b.out_w);
        add(base + "out.b", b.out_b);
        add(base + "ln2.g", b.ln2_g);
        add(base + "ln2.b", b.ln2_b);
        add(base + "fc1.w", b.fc1_w);
        add(base + "fc1.b", b.fc1_b);
        add(base + "fc2.w", b.fc2_w);
        add(base + "fc2.b", b.fc2_b);
    }
    add("lnf.g", p.lnf_g);
    add("lnf.b", p.lnf_b);
    add("head.w", p.head_w);
    add("head.b", p.head_b);
    return out;
}

template <class S>
ModelParams<S> zero_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams<S> p;
    p.cfg = cfg;
    int d = cfg.dim;
    p.tubelet_w = Mat<S>::Zero(d, cfg.tube_len());
    p.tubelet_b = ColVec<S>::Zero(d);
    p.pos = Mat<S>::Zero(cfg.tokens(), d);
    p.blocks.resize(static_cast<std::size_t>(cfg.layers));
    for (auto& b : p.blocks) {
        b.ln1_g = ColVec<S>::Zero(d);
        b.ln1_b = ColVec<S>::Zero(d);
        b.qkv_w = Mat<S>::Zero(3 * d, d);
        b.qkv_b = ColVec<S>::Zero(3 * d);
        b.out_w = Mat<S>::Zero(d, d);
        b.out_b = ColVec<S>::Zero(d);
        b.ln2_g = ColVec<S>::Zero(d);
        b.ln2_b = ColVec<S>::Zero(d);
        b.fc1_w = Mat<S>::Zero(4 * d, d);
        b.fc1_b = ColVec<S>::Zero(4 * d);
        b.fc2_w = Mat<S>::Zero(d, 4 * d);
        b.fc2_b = ColVec<S>::Zero(d);
    }
    p.lnf_g = ColVec<S>::Zero(d);
    p.lnf_b = ColVec<S>::Zero(d);
    p.head_w = Mat<S>::Zero(kHeads88, d);
    p.head_b = ColVec<S>::Zero(kHeads88);
    return p;
}

// Truncated normal (std 0.02, cut at 2 sigma) for projection weights and the
// positional table; ones for norm gains; zeros for biases and norm offsets.
template <class S>
ModelParams<S> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams<S> p = zero_params<S>(cfg);
    Rng rng(sub_seed(seed, "init"));
    for (auto& tv : tensor_views(p)) {
        bool is_weight = tv.name.ends_with(".w") || tv.name == "pos";
        bool is_gain = tv.name.ends_with("ln1.g") || tv.name.ends_with("ln2.g") ||
                       tv.name == "lnf.g";
        if (is_weight) {
            for (long i = 0; i < tv.size(); ++i)
                tv.data[i] = static_cast<S>(rng.truncated_normal(0.02));
        } else if (is_gain) {
            for (long i = 0; i < tv.size(); ++i) tv.data[i] = S(1);
        }
    }
    return p;
}

// Batch of preprocessed clips, values laid out [sample][frame][y][x][channel].
template <class S>
struct ClipBatch {
    int count = 0;
    int frames = 0, res = 0, channels = 0;
    std::vector<S> data;

    static ClipBatch make(const ModelConfig& cfg, int count) {
        ClipBatch b;
        b.count = count;
        b.frames = cfg.frames;
        b.res = cfg.res;
        b.channels = cfg.channels;
        b.data.assign(static_cast<std::size_t>(count) * b.sample_len(), S(0));
        return b;
    }
    long sample_len() const {
        return static_cast<long>(frames) * res * res * channels;
    }
    S* sample(int i) { return data.data() + static_cast<long>(i) * sample_len(); }
    const S* sample(int i) const { return data.data() + static_cast<long>(i) * sample_len(); }
};

namespace model_detail {

template <class S>
S sigmoid(S z) {
    if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
    S e = std::exp(z);
    return e / (S(1) + e);
}

template <class S>
S gelu(S x) {
    return S(0.5) * x * (S(1) + std::erf(x * S(0.7071067811865475)));
}

template <class S>
S gelu_grad(S x) {
    return S(0.5) * (S(1) + std::erf(x * S(0.7071067811865475))) +
           x * S(0.3989422804014327) * std::exp(S(-0.5) * x * x);
}

inline constexpr double kLnEps = 1e-5;

// y = (x - mean)/sqrt(var + eps) * g + b, per row. Caches xhat and 1/std.
template <class S>
void layer_norm(const Mat<S>& x, const ColVec<S>& g, const ColVec<S>& b, Mat<S>& xhat,
                ColVec<S>& inv_std, Mat<S>& y) {
    long n = x.rows(), d = x.cols();
    xhat.resize(n, d);
    inv_std.resize(n);
    y.resize(n, d);
    for (long i = 0; i < n; ++i) {
        S mu = x.row(i).mean();
        S var = (x.row(i).array() - mu).square().sum() / S(d);
        S is = S(1) / std::sqrt(var + S(kLnEps));
        inv_std(i) = is;
        xhat.row(i) = (x.row(i).array() - mu) * is;
        y.row(i) = xhat.row(i).cwiseProduct(g.transpose()) + b.transpose();
    }
}

template <class S>
void layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat, const ColVec<S>& inv_std,
                         const ColVec<S>& g, Mat<S>& dx, ColVec<S>& dg, ColVec<S>& db) {
    long n = dy.rows(), d = dy.cols();
    dx.resize(n, d);
    for (long i = 0; i < n; ++i) {
        auto dyr = dy.row(i);
        dg += dyr.cwiseProduct(xhat.row(i)).transpose();
        db += dyr.transpose();
        Eigen::Matrix<S, 1, Eigen::Dynamic> h = dyr.cwiseProduct(g.transpose());
        S mean_h = h.mean();
        S mean_hx = h.cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = ((h.array() - mean_h) - xhat.row(i).array() * mean_hx) * inv_std(i);
    }
}

template <class S>
struct LayerCache {
    Mat<S> xhat1;
    ColVec<S> inv_std1;
    Mat<S> a, qkv;
    std::vector<Mat<S>> probs;  // per-head softmax, tokens x tokens
    Mat<S> ctx, x_mid, xhat2;
    ColVec<S> inv_std2;
    Mat<S> b2, h1, g1;
};

template <class S>
struct Workspace {
    Mat<S> tube;              // tokens x tube_len
    std::vector<Mat<S>> xs;   // layer inputs, layers + 1 entries
    std::vector<LayerCache<S>> layers;
    Mat<S> xhatf, f_norm;
    ColVec<S> inv_stdf;
    ColVec<S> pooled, z, p;
};

// Gather the clip into a tokens x tube_len matrix. Token order is temporal
// slot major, then patch row, then patch column; within a tube the order is
// (dt, dy, dx, channel).
template <class S>
void extract_tubes(const ModelConfig& cfg, const S* clip, Mat<S>& tube) {
    int grid = cfg.res / cfg.patch;
    int slots = cfg.frames / cfg.tubelet;
    tube.resize(cfg.tokens(), cfg.tube_len());
    long row_stride = static_cast<long>(cfg.res) * cfg.channels;   // one image row
    long frame_stride = static_cast<long>(cfg.res) * row_stride;   // res rows
    for (int ti = 0; ti < slots; ++ti) {
        for (int py = 0; py < grid; ++py) {
            for (int px = 0; px < grid; ++px) {
                long token = (static_cast<long>(ti) * grid + py) * grid + px;
                S* dst = tube.data() + token * cfg.tube_len();
                for (int dt = 0; dt < cfg.tubelet; ++dt) {
                    const S* frame = clip + (static_cast<long>(ti) * cfg.tubelet + dt) * frame_stride;
                    for (int dy = 0; dy < cfg.patch; ++dy) {
                        const S* src = frame + (static_cast<long>(py) * cfg.patch + dy) * row_stride +
                                       static_cast<long>(px) * cfg.patch * cfg.channels;
                        for (int k = 0; k < cfg.patch * cfg.channels; ++k) *dst++ = src[k];
                    }
                }
            }
        }
    }
}

template <class S>
void forward_sample(const ModelParams<S>& params, const S* clip, Workspace<S>& ws) {
    const ModelConfig& cfg = params.cfg;
    const int n = cfg.tokens();
    const int d = cfg.dim;
    const int h = cfg.heads;
    const int hd = d / h;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));

    extract_tubes(cfg, clip, ws.tube);
    ws.xs.resize(static_cast<std::size_t>(cfg.layers) + 1);
    ws.layers.resize(static_cast<std::size_t>(cfg.layers));

    ws.xs[0].noalias() = ws.tube * params.tubelet_w.transpose();
    ws.xs[0].rowwise() += params.tubelet_b.transpose();
    ws.xs[0] += params.pos;

    for (int l = 0; l < cfg.layers; ++l) {
        const auto& blk = params.blocks[static_cast<std::size_t>(l)];
        auto& c = ws.layers[static_cast<std::size_t>(l)];
        const Mat<S>& x = ws.xs[static_cast<std::size_t>(l)];

        layer_norm(x, blk.ln1_g, blk.ln1_b, c.xhat1, c.inv_std1, c.a);
        c.qkv.noalias() = c.a * blk.qkv_w.transpose();
        c.qkv.rowwise() += blk.qkv_b.transpose();

        c.probs.resize(static_cast<std::size_t>(h));
        c.ctx.resize(n, d);
        for (int head = 0; head < h; ++head) {
            auto q = c.qkv.block(0, head * hd, n, hd);
            auto k = c.qkv.block(0, d + head * hd, n, hd);
            auto v = c.qkv.block(0, 2 * d + head * hd, n, hd);
            Mat<S>& p = c.probs[static_cast<std::size_t>(head)];
            p.noalias() = q * k.transpose();
            p *= scale;
            for (long i = 0; i < n; ++i) {
                S row_max = p.row(i).maxCoeff();
                p.row(i) = (p.row(i).array() - row_max).exp();
                p.row(i) /= p.row(i).sum();
            }
            c.ctx.block(0, head * hd, n, hd).noalias() = p * v;
        }

        c.x_mid.noalias() = c.ctx * blk.out_w.transpose();
        c.x_mid.rowwise() += blk.out_b.transpose();
        c.x_mid += x;

        layer_norm(c.x_mid, blk.ln2_g, blk.ln2_b, c.xhat2, c.inv_std2, c.b2);
        c.h1.noalias() = c.b2 * blk.fc1_w.transpose();
        c.h1.rowwise() += blk.fc1_b.transpose();
        c.g1 = c.h1.unaryExpr([](S x_) { return gelu(x_); });

        Mat<S>& x_next = ws.xs[static_cast<std::size_t>(l) + 1];
        x_next.noalias() = c.g1 * blk.fc2_w.transpose();
        x_next.rowwise() += blk.fc2_b.transpose();
        x_next += c.x_mid;
    }

    layer_norm(ws.xs.back(), params.lnf_g, params.lnf_b, ws.xhatf, ws.inv_stdf, ws.f_norm);
    ws.pooled = ws.f_norm.colwise().mean().transpose();
    ws.z.noalias() = params.head_w * ws.pooled;
    ws.z += params.head_b;
    ws.p = ws.z.unaryExpr([](S z_) { return sigmoid(z_); });
}

// Backward pass from head-logit gradients; accumulates into `grads`.
template <class S>
void backward_sample(const ModelParams<S>& params, const Workspace<S>& ws,
                     const ColVec<S>& dz, ModelParams<S>& grads) {
    const ModelConfig& cfg = params.cfg;
    const int n = cfg.tokens();
    const int d = cfg.dim;
    const int h = cfg.heads;
    const int hd = d / h;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));

    grads.head_w.noalias() += dz * ws.pooled.transpose();
    grads.head_b += dz;

    ColVec<S> d_pooled = params.head_w.transpose() * dz;
    Mat<S> df(n, d);
    df.rowwise() = (d_pooled / S(n)).transpose();

    Mat<S> dx;
    layer_norm_backward(df, ws.xhatf, ws.inv_stdf, params.lnf_g, dx, grads.lnf_g, grads.lnf_b);

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& blk = params.blocks[static_cast<std::size_t>(l)];
        auto& gb = grads.blocks[static_cast<std::size_t>(l)];
        const auto& c = ws.layers[static_cast<std::size_t>(l)];

        // MLP branch: dx covers d(x_next)
        Mat<S> dg1 = dx * blk.fc2_w;
        gb.fc2_w.noalias() += dx.transpose() * c.g1;
        gb.fc2_b += dx.colwise().sum().transpose();
        Mat<S> dh1 = dg1.binaryExpr(c.h1, [](S g_, S x_) { return g_ * gelu_grad(x_); });
        gb.fc1_w.noalias() += dh1.transpose() * c.b2;
        gb.fc1_b += dh1.colwise().sum().transpose();
        Mat<S> db2 = dh1 * blk.fc1_w;

        Mat<S> dx_mid;
        layer_norm_backward(db2, c.xhat2, c.inv_std2, blk.ln2_g, dx_mid, gb.ln2_g, gb.ln2_b);
        dx_mid += dx;  // residual

        // attention branch: dx_mid covers d(x_mid)
        gb.out_w.noalias() += dx_mid.transpose() * c.ctx;
        gb.out_b += dx_mid.colwise().sum().transpose();
        Mat<S> dctx = dx_mid * blk.out_w;

        Mat<S> dqkv = Mat<S>::Zero(n, 3 * d);
        for (int head = 0; head < h; ++head) {
            const Mat<S>& p = c.probs[static_cast<std::size_t>(head)];
            auto q = c.qkv.block(0, head * hd, n, hd);
            auto k = c.qkv.block(0, d + head * hd, n, hd);
            auto v = c.qkv.block(0, 2 * d + head * hd, n, hd);
            auto dctx_h = dctx.block(0, head * hd, n, hd);

            Mat<S> dp = dctx_h * v.transpose();
            dqkv.block(0, 2 * d + head * hd, n, hd).noalias() = p.transpose() * dctx_h;

            // softmax backward: ds = p .* (dp - rowsum(dp .* p))
            Mat<S> ds(n, n);
            for (long i = 0; i < n; ++i) {
                S dot = dp.row(i).cwiseProduct(p.row(i)).sum();
                ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
            }
            ds *= scale;
            dqkv.block(0, head * hd, n, hd).noalias() = ds * k;
            dqkv.block(0, d + head * hd, n, hd).noalias() = ds.transpose() * q;
        }

        gb.qkv_w.noalias() += dqkv.transpose() * c.a;
        gb.qkv_b += dqkv.colwise().sum().transpose();
        Mat<S> da = dqkv * blk.qkv_w;

        Mat<S> dx_ln;
        layer_norm_backward(da, c.xhat1, c.inv_std1, blk.ln1_g, dx_ln, gb.ln1_g, gb.ln1_b);
        dx = dx_mid + dx_ln;  // residual into the layer input
    }

    grads.pos += dx;
    grads.tubelet_w.noalias() += dx.transpose() * ws.tube;
    grads.tubelet_b += dx.colwise().sum().transpose();
}

}  // namespace model_detail

// Batch forward: rows of the result are per-sample 88-key onset likelihoods,
// each strictly inside (0, 1).
template <class S>
Mat<S> forward(const ModelParams<S>& params, const ClipBatch<S>& batch, int threads = 1) {
    params.cfg.validate();
    if (batch.frames != params.cfg.frames || batch.res != params.cfg.res ||
        batch.channels != params.cfg.channels)
        fail("clip shape ", batch.frames, "x", batch.res, "x", batch.res, "x", batch.channels,
             " does not match model config");
    Mat<S> out(batch.count, kHeads88);
    parallel_for(batch.count, threads, [&](std::int64_t lo, std::int64_t hi) {
        model_detail::Workspace<S> ws;
        for (std::int64_t i = lo; i < hi; ++i) {
            model_detail::forward_sample(params, batch.sample(static_cast<int>(i)), ws);
            out.row(i) = ws.p.transpose();
        }
    });
    return out;
}

inline constexpr double kBceEps = 1e-7;

// Mean over all batch elements of -[w*y*ln(p) + (1-y)*ln(1-p)], predictions
// clamped to [eps, 1-eps]. The class weight scales only the positive term, so
// a 0.5 label contributes w*0.5 on the positive side.
template <class S>
S loss_weighted_bce(const Mat<S>& pred, const Mat<S>& target, S w) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        fail("prediction/target shape mismatch");
    double total = 0.0;
    for (long i = 0; i < pred.rows(); ++i) {
        for (long j = 0; j < pred.cols(); ++j) {
            double p = std::min(std::max(static_cast<double>(pred(i, j)), kBceEps), 1.0 - kBceEps);
            double y = static_cast<double>(target(i, j));
            total -= static_cast<double>(w) * y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        }
    }
    return static_cast<S>(total / (static_cast<double>(pred.rows()) * pred.cols()));
}

template <class S>
struct BackpropResult {
    S loss = S(0);
    ModelParams<S> grads;
};

// Exact gradients of loss_weighted_bce(forward(...)). Per-sample gradients are
// computed independently (parallel) and reduced in sample order, so the result
// does not depend on the thread count.
template <class S>
BackpropResult<S> grad(const ModelParams<S>& params, const ClipBatch<S>& batch,
                       const Mat<S>& targets, S w, int threads = 1) {
    params.cfg.validate();
    if (targets.rows() != batch.count || targets.cols() != kHeads88)
        fail("target matrix must be batch x 88");
    const int b = batch.count;
    const double denom = static_cast<double>(b) * kHeads88;

    std::vector<ModelParams<S>> sample_grads;
    std::vector<double> sample_loss(static_cast<std::size_t>(b), 0.0);
    sample_grads.reserve(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) sample_grads.push_back(zero_params<S>(params.cfg));

    parallel_for(b, threads, [&](std::int64_t lo, std::int64_t hi) {
        model_detail::Workspace<S> ws;
        for (std::int64_t i = lo; i < hi; ++i) {
            model_detail::forward_sample(params, batch.sample(static_cast<int>(i)), ws);
            ColVec<S> dz(kHeads88);
            double loss_i = 0.0;
            for (int k = 0; k < kHeads88; ++k) {
                double p = static_cast<double>(ws.p(k));
                double y = static_cast<double>(targets(i, k));
                double pc = std::min(std::max(p, kBceEps), 1.0 - kBceEps);
                loss_i -= static_cast<double>(w) * y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
                // d/dz of the clamped loss; zero where the clamp is active
                double g = 0.0;
                if (p > kBceEps && p < 1.0 - kBceEps)
                    g = (-static_cast<double>(w) * y * (1.0 - p) + (1.0 - y) * p) / denom;
                dz(k) = static_cast<S>(g);
            }
            sample_loss[static_cast<std::size_t>(i)] = loss_i;
            model_detail::backward_sample(params, ws, dz, sample_grads[static_cast<std::size_t>(i)]);
        }
    });

    BackpropResult<S> result;
    result.grads = zero_params<S>(params.cfg);
    double total_loss = 0.0;
    for (int i = 0; i < b; ++i) total_loss += sample_loss[static_cast<std::size_t>(i)];
    result.loss = static_cast<S>(total_loss / denom);

    auto dst = tensor_views(result.grads);
    for (int i = 0; i < b; ++i) {
        auto src = tensor_views(sample_grads[static_cast<std::size_t>(i)]);
        for (std::size_t t = 0; t < dst.size(); ++t)
            for (long j = 0; j < dst[t].size(); ++j) dst[t].data[j] += src[t].data[j];
    }

    if (!std::isfinite(static_cast<double>(result.loss))) {
        // identify the first offending layer for the error message
        model_detail::Workspace<S> ws;
        model_detail::forward_sample(params, batch.sample(0), ws);
        for (std::size_t l = 0; l < ws.xs.size(); ++l)
            if (!ws.xs[l].allFinite())
                fail("non-finite loss (first bad activation entering layer ", l, ")");
        fail("non-finite loss (head outputs)");
    }
    return result;
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_tensor;
    long worst_index = 0;
    double analytic = 0.0, numeric = 0.0;
};

// Backprop vs central finite differences over every parameter, in the scalar
// type S (use double for a meaningful tolerance).
template <class S>
GradCheckReport gradient_check(const ModelConfig& cfg, std::uint64_t seed, double fd_step = 1e-5,
                               int batch = 2, S w = S(2), int threads = 1) {
    ModelParams<S> params = init_params<S>(cfg, seed);
    Rng rng(sub_seed(seed, "gradcheck"));

    ClipBatch<S> clips = ClipBatch<S>::make(cfg, batch);
    for (auto& v : clips.data) v = static_cast<S>(rng.uniform01());
    Mat<S> targets(batch, kHeads88);
    for (long i = 0; i < targets.size(); ++i) {
        double u = rng.uniform01();
        targets.data()[i] = u < 0.25 ? S(1) : (u < 0.5 ? S(0.5) : S(0));
    }

    BackpropResult<S> bp = grad(params, clips, targets, w, threads);
    auto analytic_views = tensor_views(bp.grads);
    auto param_views = tensor_views(params);

    GradCheckReport report;
    for (std::size_t t = 0; t < param_views.size(); ++t) {
        long count = param_views[t].size();
        std::vector<double> rel(static_cast<std::size_t>(count), 0.0);
        std::vector<double> numeric(static_cast<std::size_t>(count), 0.0);
        parallel_for(count, threads, [&](std::int64_t lo, std::int64_t hi) {
            ModelParams<S> local = params;
            S* slot = tensor_views(local)[t].data;
            for (std::int64_t j = lo; j < hi; ++j) {
                S saved = slot[j];
                slot[j] = saved + static_cast<S>(fd_step);
                double lp = static_cast<double>(
                    loss_weighted_bce(forward(local, clips, 1), targets, w));
                slot[j] = saved - static_cast<S>(fd_step);
                double lm = static_cast<double>(
                    loss_weighted_bce(forward(local, clips, 1), targets, w));
                slot[j] = saved;
                double fd = (lp - lm) / (2.0 * fd_step);
                double an = static_cast<double>(analytic_views[t].data[j]);
                double denom = std::max({std::abs(an), std::abs(fd), 1e-6});
                rel[static_cast<std::size_t>(j)] = std::abs(an - fd) / denom;
                numeric[static_cast<std::size_t>(j)] = fd;
            }
        });
        for (long j = 0; j < count; ++j) {
            if (rel[static_cast<std::size_t>(j)] > report.max_rel_err) {
                report.max_rel_err = rel[static_cast<std::size_t>(j)];
                report.worst_tensor = param_views[t].name;
                report.worst_index = j;
                report.analytic = static_cast<double>(analytic_views[t].data[j]);
                report.numeric = numeric[static_cast<std::size_t>(j)];
            }
        }
    }
    return report;
}

}  // namespace vpt
