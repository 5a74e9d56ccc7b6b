#include "lusgate/network.hpp"

#include <algorithm>
#include <cmath>

#include "lusgate/errors.hpp"
#include "lusgate/rng.hpp"

namespace lusgate::nn {

namespace {

struct ConvGeom {
    int oh, ow, pad_top, pad_left, K;  // K = kh*kw*ic
};

ConvGeom conv_geometry(const LayerDesc& d, const Shape& in, const Shape& out) {
    ConvGeom g;
    g.oh = out.h;
    g.ow = out.w;
    g.K = d.kh * d.kw * in.c;
    if (d.pad == Padding::Same) {
        int pad_h = std::max((out.h - 1) * d.stride + d.kh - in.h, 0);
        int pad_w = std::max((out.w - 1) * d.stride + d.kw - in.w, 0);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    } else {
        g.pad_top = g.pad_left = 0;
    }
    return g;
}

// C[M x N] += A[M x K] * B[K x N]; row-major, N small enough to vectorize.
void gemm_acc(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const double* a = A + static_cast<std::size_t>(m) * K;
        double* cr = C + static_cast<std::size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            double av = a[k];
            const double* br = B + static_cast<std::size_t>(k) * N;
            for (int n = 0; n < N; ++n) cr[n] += av * br[n];
        }
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

bool ModelParams::all_finite() const {
    for (const auto& blk : blocks) {
        for (double x : blk.w)
            if (!std::isfinite(x)) return false;
        for (double x : blk.b)
            if (!std::isfinite(x)) return false;
    }
    return true;
}

void ModelParams::check_matches_spec() const {
    auto chain = spec.shape_chain();
    if (blocks.size() != spec.layers.size()) throw SpecError("parameter block count does not match spec");
    Shape in{spec.in_h, spec.in_w, spec.in_c};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& d = spec.layers[i];
        const ParamBlock& blk = blocks[i];
        std::size_t want_w = 0, want_b = 0;
        if (d.kind == LayerKind::Conv) {
            want_w = static_cast<std::size_t>(d.kh) * d.kw * in.c * d.out_ch;
            want_b = static_cast<std::size_t>(d.out_ch);
        } else if (d.kind == LayerKind::Dense) {
            want_w = static_cast<std::size_t>(in.size()) * d.units;
            want_b = static_cast<std::size_t>(d.units);
        }
        if (blk.w.size() != want_w || blk.b.size() != want_b)
            throw SpecError("layer " + std::to_string(i) + ": parameter tensor shape does not match spec");
        in = chain[i];
    }
    if (!all_finite()) throw NumericError("model contains non-finite weights");
}

ModelParams build_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    ModelParams p;
    p.spec = spec;
    p.spec_hash = spec.hash();
    p.meta.seed = seed;
    p.blocks.resize(spec.layers.size());

    auto chain = spec.shape_chain();
    Rng rng(splitmix64(seed ^ 0x6c75736761746501ull));

    // the init scheme follows the next nonlinearity downstream of the layer
    auto next_activation = [&](std::size_t i) {
        for (std::size_t j = i + 1; j < spec.layers.size(); ++j) {
            LayerKind k = spec.layers[j].kind;
            if (k == LayerKind::Relu) return LayerKind::Relu;
            if (k == LayerKind::Sigmoid || k == LayerKind::SigmoidHead) return LayerKind::Sigmoid;
            if (k == LayerKind::Tanh) return LayerKind::Tanh;
            if (k == LayerKind::SoftmaxHead) return LayerKind::SoftmaxHead;
        }
        return LayerKind::Flatten;  // none found
    };

    Shape in{spec.in_h, spec.in_w, spec.in_c};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& d = spec.layers[i];
        if (d.trainable()) {
            int fan_in, fan_out, n_w, n_b;
            if (d.kind == LayerKind::Conv) {
                fan_in = d.kh * d.kw * in.c;
                fan_out = d.kh * d.kw * d.out_ch;
                n_w = fan_in * d.out_ch;
                n_b = d.out_ch;
            } else {
                fan_in = in.size();
                fan_out = d.units;
                n_w = fan_in * d.units;
                n_b = d.units;
            }
            ParamBlock& blk = p.blocks[i];
            blk.w.resize(n_w);
            blk.b.assign(n_b, 0.0);
            if (next_activation(i) == LayerKind::Relu) {
                double sd = std::sqrt(2.0 / fan_in);
                for (double& x : blk.w) x = rng.normal(0.0, sd);
            } else {
                double lim = std::sqrt(6.0 / (fan_in + fan_out));
                for (double& x : blk.w) x = rng.uniform(-lim, lim);
            }
        }
        in = chain[i];
    }
    return p;
}

void ModelGrads::zero() {
    for (auto& blk : blocks) {
        std::fill(blk.w.begin(), blk.w.end(), 0.0);
        std::fill(blk.b.begin(), blk.b.end(), 0.0);
    }
}

ModelGrads make_grads(const ModelParams& params) {
    ModelGrads g;
    g.blocks.resize(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        g.blocks[i].w.assign(params.blocks[i].w.size(), 0.0);
        g.blocks[i].b.assign(params.blocks[i].b.size(), 0.0);
    }
    return g;
}

Executor::Executor(const ModelParams& params) : params_(params) {
    shapes_ = params.spec.shape_chain();
    acts_.resize(params.spec.layers.size() + 1);
    im2col_.resize(params.spec.layers.size());
    pool_argmax_.resize(params.spec.layers.size());
}

const Tensor& Executor::activation(int layer_index) const { return acts_[layer_index + 1]; }

const Tensor& Executor::prehead() const {
    std::size_t n = params_.spec.layers.size();
    LayerKind last = params_.spec.layers.back().kind;
    if (last != LayerKind::SoftmaxHead && last != LayerKind::SigmoidHead)
        throw InvalidArgument("network has no head layer");
    return acts_[n - 1];
}

std::uint64_t Executor::activation_pattern() const {
    if (!have_forward_) throw InvalidArgument("activation_pattern called before forward");
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    const auto& layers = params_.spec.layers;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::Relu) {
            const Tensor& y = acts_[i + 1];
            std::uint64_t bits = 0;
            for (int j = 0; j < y.size(); ++j) {
                bits = (bits << 1) | (y.v[j] > 0.0 ? 1u : 0u);
                if ((j & 63) == 63) {
                    mix(bits);
                    bits = 0;
                }
            }
            mix(bits);
        } else if (layers[i].kind == LayerKind::MaxPool) {
            for (int a : pool_argmax_[i]) mix(static_cast<std::uint64_t>(a) + 1);
        }
    }
    return h;
}

const Tensor& Executor::forward(const Tensor& input) {
    const NetworkSpec& spec = params_.spec;
    if (input.h != spec.in_h || input.w != spec.in_w || input.c != spec.in_c)
        throw InvalidArgument("input shape does not match network input");
    acts_[0] = input;

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& d = spec.layers[i];
        const Tensor& x = acts_[i];
        Shape os = shapes_[i];
        Tensor& y = acts_[i + 1];
        if (y.h != os.h || y.w != os.w || y.c != os.c) y = Tensor(os.h, os.w, os.c);

        switch (d.kind) {
            case LayerKind::Conv: {
                ConvGeom g = conv_geometry(d, {x.h, x.w, x.c}, os);
                int M = g.oh * g.ow;
                auto& patches = im2col_[i];
                patches.assign(static_cast<std::size_t>(M) * g.K, 0.0);
                for (int oy = 0; oy < g.oh; ++oy) {
                    for (int ox = 0; ox < g.ow; ++ox) {
                        double* row = patches.data() + (static_cast<std::size_t>(oy) * g.ow + ox) * g.K;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = oy * d.stride + ky - g.pad_top;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = ox * d.stride + kx - g.pad_left;
                                if (ix < 0 || ix >= x.w) continue;
                                const double* src = x.v.data() + (static_cast<std::size_t>(iy) * x.w + ix) * x.c;
                                std::copy(src, src + x.c, row + (ky * d.kw + kx) * x.c);
                            }
                        }
                    }
                }
                const ParamBlock& blk = params_.blocks[i];
                for (int m = 0; m < M; ++m) {
                    double* out = y.v.data() + static_cast<std::size_t>(m) * d.out_ch;
                    std::copy(blk.b.begin(), blk.b.end(), out);
                }
                gemm_acc(patches.data(), blk.w.data(), y.v.data(), M, g.K, d.out_ch);
                break;
            }
            case LayerKind::MaxPool: {
                auto& arg = pool_argmax_[i];
                arg.assign(static_cast<std::size_t>(os.size()), 0);
                for (int oy = 0; oy < os.h; ++oy) {
                    for (int ox = 0; ox < os.w; ++ox) {
                        for (int ch = 0; ch < os.c; ++ch) {
                            double best = -1e300;
                            int best_idx = 0;
                            for (int ky = 0; ky < d.window; ++ky) {
                                for (int kx = 0; kx < d.window; ++kx) {
                                    int iy = oy * d.pool_stride + ky;
                                    int ix = ox * d.pool_stride + kx;
                                    int idx = (iy * x.w + ix) * x.c + ch;
                                    if (x.v[idx] > best) {
                                        best = x.v[idx];
                                        best_idx = idx;
                                    }
                                }
                            }
                            int oidx = (oy * os.w + ox) * os.c + ch;
                            y.v[oidx] = best;
                            arg[oidx] = best_idx;
                        }
                    }
                }
                break;
            }
            case LayerKind::Dense: {
                const ParamBlock& blk = params_.blocks[i];
                int in_n = x.size(), out_n = d.units;
                std::copy(blk.b.begin(), blk.b.end(), y.v.begin());
                gemm_acc(x.v.data(), blk.w.data(), y.v.data(), 1, in_n, out_n);
                break;
            }
            case LayerKind::Relu:
                for (int j = 0; j < x.size(); ++j) y.v[j] = x.v[j] > 0.0 ? x.v[j] : 0.0;
                break;
            case LayerKind::Sigmoid:
            case LayerKind::SigmoidHead:
                for (int j = 0; j < x.size(); ++j) y.v[j] = sigmoid(x.v[j]);
                break;
            case LayerKind::Tanh:
                for (int j = 0; j < x.size(); ++j) y.v[j] = std::tanh(x.v[j]);
                break;
            case LayerKind::Flatten:
                std::copy(x.v.begin(), x.v.end(), y.v.begin());
                break;
            case LayerKind::SoftmaxHead: {
                double m = *std::max_element(x.v.begin(), x.v.end());
                double sum = 0.0;
                for (int j = 0; j < x.size(); ++j) {
                    y.v[j] = std::exp(x.v[j] - m);
                    sum += y.v[j];
                }
                for (int j = 0; j < x.size(); ++j) y.v[j] /= sum;
                break;
            }
        }
        if (!y.all_finite())
            throw NumericError("layer " + std::to_string(i) + " produced non-finite values");
    }
    have_forward_ = true;
    return acts_.back();
}

Tensor Executor::backward(const Tensor& grad, bool grad_at_prehead, ModelGrads* sink) {
    return run_backward(grad, grad_at_prehead, sink, false);
}

Tensor Executor::backward_guided(const Tensor& grad, bool grad_at_prehead) {
    return run_backward(grad, grad_at_prehead, nullptr, true);
}

Tensor Executor::run_backward(const Tensor& grad, bool grad_at_prehead, ModelGrads* sink, bool guided) {
    const NetworkSpec& spec = params_.spec;
    if (!have_forward_) throw InvalidArgument("backward called before forward");

    int start = static_cast<int>(spec.layers.size()) - 1;
    Tensor g = grad;
    if (grad_at_prehead) {
        LayerKind last = spec.layers.back().kind;
        if (last != LayerKind::SoftmaxHead && last != LayerKind::SigmoidHead)
            throw InvalidArgument("grad_at_prehead requires a head layer");
        --start;  // gradient already refers to the head input
    }
    if (g.size() != acts_[start + 1].size())
        throw InvalidArgument("gradient shape does not match network output");

    for (int i = start; i >= 0; --i) {
        if (i == capture_at_) captured_ = g;
        const LayerDesc& d = spec.layers[i];
        const Tensor& x = acts_[i];
        const Tensor& y = acts_[i + 1];
        Tensor gin(x.h, x.w, x.c);

        switch (d.kind) {
            case LayerKind::Conv: {
                ConvGeom cg = conv_geometry(d, {x.h, x.w, x.c}, shapes_[i]);
                int M = cg.oh * cg.ow, K = cg.K, N = d.out_ch;
                const auto& patches = im2col_[i];
                const ParamBlock& blk = params_.blocks[i];
                if (sink) {
                    ParamBlock& gb = sink->blocks[i];
                    // dW[k][n] += sum_m patches[m][k] * g[m][n]
                    for (int m = 0; m < M; ++m) {
                        const double* a = patches.data() + static_cast<std::size_t>(m) * K;
                        const double* gr = g.v.data() + static_cast<std::size_t>(m) * N;
                        for (int k = 0; k < K; ++k) {
                            double av = a[k];
                            if (av == 0.0) continue;
                            double* dwr = gb.w.data() + static_cast<std::size_t>(k) * N;
                            for (int n = 0; n < N; ++n) dwr[n] += av * gr[n];
                        }
                    }
                    for (int m = 0; m < M; ++m) {
                        const double* gr = g.v.data() + static_cast<std::size_t>(m) * N;
                        for (int n = 0; n < N; ++n) gb.b[n] += gr[n];
                    }
                }
                // dPatches[m][k] = sum_n g[m][n] * W[k][n], via transposed weights
                std::vector<double> wt(static_cast<std::size_t>(N) * K);
                for (int k = 0; k < K; ++k)
                    for (int n = 0; n < N; ++n)
                        wt[static_cast<std::size_t>(n) * K + k] = blk.w[static_cast<std::size_t>(k) * N + n];
                std::vector<double> dpatch(static_cast<std::size_t>(M) * K, 0.0);
                gemm_acc(g.v.data(), wt.data(), dpatch.data(), M, N, K);
                // scatter patches back to input positions
                for (int oy = 0; oy < cg.oh; ++oy) {
                    for (int ox = 0; ox < cg.ow; ++ox) {
                        const double* row = dpatch.data() + (static_cast<std::size_t>(oy) * cg.ow + ox) * K;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = oy * d.stride + ky - cg.pad_top;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = ox * d.stride + kx - cg.pad_left;
                                if (ix < 0 || ix >= x.w) continue;
                                double* dst = gin.v.data() + (static_cast<std::size_t>(iy) * x.w + ix) * x.c;
                                const double* src = row + (ky * d.kw + kx) * x.c;
                                for (int ch = 0; ch < x.c; ++ch) dst[ch] += src[ch];
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool: {
                const auto& arg = pool_argmax_[i];
                for (std::size_t j = 0; j < arg.size(); ++j) gin.v[arg[j]] += g.v[j];
                break;
            }
            case LayerKind::Dense: {
                const ParamBlock& blk = params_.blocks[i];
                int in_n = x.size(), out_n = d.units;
                if (sink) {
                    ParamBlock& gb = sink->blocks[i];
                    for (int a = 0; a < in_n; ++a) {
                        double xv = x.v[a];
                        if (xv == 0.0) continue;
                        double* dwr = gb.w.data() + static_cast<std::size_t>(a) * out_n;
                        for (int o = 0; o < out_n; ++o) dwr[o] += xv * g.v[o];
                    }
                    for (int o = 0; o < out_n; ++o) gb.b[o] += g.v[o];
                }
                for (int a = 0; a < in_n; ++a) {
                    const double* wr = blk.w.data() + static_cast<std::size_t>(a) * out_n;
                    double s = 0.0;
                    for (int o = 0; o < out_n; ++o) s += wr[o] * g.v[o];
                    gin.v[a] = s;
                }
                break;
            }
            case LayerKind::Relu:
                if (guided) {
                    for (int j = 0; j < y.size(); ++j)
                        gin.v[j] = (y.v[j] > 0.0 && g.v[j] > 0.0) ? g.v[j] : 0.0;
                } else {
                    for (int j = 0; j < y.size(); ++j) gin.v[j] = y.v[j] > 0.0 ? g.v[j] : 0.0;
                }
                break;
            case LayerKind::Sigmoid:
            case LayerKind::SigmoidHead:
                for (int j = 0; j < y.size(); ++j) gin.v[j] = g.v[j] * y.v[j] * (1.0 - y.v[j]);
                break;
            case LayerKind::Tanh:
                for (int j = 0; j < y.size(); ++j) gin.v[j] = g.v[j] * (1.0 - y.v[j] * y.v[j]);
                break;
            case LayerKind::Flatten:
                std::copy(g.v.begin(), g.v.end(), gin.v.begin());
                break;
            case LayerKind::SoftmaxHead: {
                double dot = 0.0;
                for (int j = 0; j < y.size(); ++j) dot += g.v[j] * y.v[j];
                for (int j = 0; j < y.size(); ++j) gin.v[j] = y.v[j] * (g.v[j] - dot);
                break;
            }
        }
        g = std::move(gin);
    }
    capture_at_ = -1;
    return g;
}

std::vector<Tensor> forward_batch(const ModelParams& params, const std::vector<Tensor>& inputs) {
    Executor ex(params);
    std::vector<Tensor> out;
    out.reserve(inputs.size());
    for (const Tensor& x : inputs) out.push_back(ex.forward(x));
    return out;
}

}  // namespace lusgate::nn
