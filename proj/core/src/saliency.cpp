#include "lusgate/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "lusgate/errors.hpp"

namespace lusgate {
namespace {

void normalize_max(Tensor& t) {
    double mx = 0.0;
    for (double v : t.v) mx = std::max(mx, v);
    if (mx > 0.0)
        for (double& v : t.v) v /= mx;
}

Tensor one_hot_like(const Tensor& out, int target_class) {
    if (target_class < 0 || target_class >= out.size())
        throw InvalidArgument("target class out of range for the network head");
    Tensor g(out.h, out.w, out.c);
    g.v[target_class] = 1.0;
    return g;
}

}  // namespace

int last_conv_layer(const nn::NetworkSpec& spec) {
    for (int i = static_cast<int>(spec.layers.size()) - 1; i >= 0; --i)
        if (spec.layers[i].kind == nn::LayerKind::Conv) return i;
    throw InvalidArgument("network has no convolutional layer");
}

SaliencyMap grad_cam(const nn::ModelParams& params, const Tensor& frame, int target_class,
                     int target_layer) {
    if (target_layer < 0 || target_layer >= static_cast<int>(params.spec.layers.size()) ||
        params.spec.layers[target_layer].kind != nn::LayerKind::Conv)
        throw InvalidArgument("target layer must be convolutional");

    nn::Executor ex(params);
    const Tensor& out = ex.forward(frame);
    Tensor seed = one_hot_like(out, target_class);
    ex.capture_gradient_at(target_layer);
    ex.backward(seed, true, nullptr);

    const Tensor& fmap = ex.activation(target_layer);
    const Tensor& grad = ex.captured_gradient();

    std::vector<double> weight(fmap.c, 0.0);
    for (int y = 0; y < fmap.h; ++y)
        for (int x = 0; x < fmap.w; ++x)
            for (int ch = 0; ch < fmap.c; ++ch) weight[ch] += grad.at(y, x, ch);
    const double inv_area = 1.0 / (static_cast<double>(fmap.h) * fmap.w);
    for (auto& w : weight) w *= inv_area;

    Tensor cam(fmap.h, fmap.w, 1);
    for (int y = 0; y < fmap.h; ++y) {
        for (int x = 0; x < fmap.w; ++x) {
            double s = 0.0;
            for (int ch = 0; ch < fmap.c; ++ch) s += weight[ch] * fmap.at(y, x, ch);
            cam.at(y, x, 0) = std::max(s, 0.0);
        }
    }

    SaliencyMap map;
    map.heatmap = bilinear_upsample(cam, frame.h, frame.w);
    normalize_max(map.heatmap);
    map.target_class = target_class;
    map.target_layer = target_layer;
    return map;
}

Tensor guided_backprop(const nn::ModelParams& params, const Tensor& frame, int target_class) {
    nn::Executor ex(params);
    const Tensor& out = ex.forward(frame);
    return ex.backward_guided(one_hot_like(out, target_class), true);
}

SaliencyMap guided_grad_cam(const nn::ModelParams& params, const Tensor& frame, int target_class,
                            int target_layer) {
    SaliencyMap cam = grad_cam(params, frame, target_class, target_layer);
    Tensor gbp = guided_backprop(params, frame, target_class);

    SaliencyMap map;
    map.heatmap = Tensor(frame.h, frame.w, 1);
    for (int y = 0; y < frame.h; ++y) {
        for (int x = 0; x < frame.w; ++x) {
            double mag = 0.0;
            for (int ch = 0; ch < gbp.c; ++ch) mag += std::abs(gbp.at(y, x, ch));
            map.heatmap.at(y, x, 0) = mag * cam.heatmap.at(y, x, 0);
        }
    }
    normalize_max(map.heatmap);
    map.target_class = target_class;
    map.target_layer = target_layer;
    return map;
}

Tensor bilinear_upsample(const Tensor& map, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw InvalidArgument("upsample target must be positive");
    Tensor out(out_h, out_w, map.c);
    const double sy = static_cast<double>(map.h) / out_h;
    const double sx = static_cast<double>(map.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(map.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, map.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(map.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, map.w - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < map.c; ++ch) {
                const double top = map.at(y0, x0, ch) * (1.0 - wx) + map.at(y0, x1, ch) * wx;
                const double bot = map.at(y1, x0, ch) * (1.0 - wx) + map.at(y1, x1, ch) * wx;
                out.at(y, x, ch) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> colorize_overlay(const Tensor& frame, const Tensor& heatmap) {
    if (frame.c != 1) throw InvalidArgument("overlay expects a grayscale frame");
    if (heatmap.h != frame.h || heatmap.w != frame.w || heatmap.c != 1)
        throw InvalidArgument("heatmap size does not match the frame");

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(frame.h) * frame.w * 3);
    auto to_u8 = [](double v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    for (int y = 0; y < frame.h; ++y) {
        for (int x = 0; x < frame.w; ++x) {
            const double g = frame.at(y, x, 0);
            const double v = std::clamp(heatmap.at(y, x, 0), 0.0, 1.0);
            // red (high activation) to blue (low), blended over the grayscale
            const double r = v, b = 1.0 - v, gr = 0.15;
            const std::size_t i = (static_cast<std::size_t>(y) * frame.w + x) * 3;
            rgb[i + 0] = to_u8(0.6 * g + 0.4 * r);
            rgb[i + 1] = to_u8(0.6 * g + 0.4 * gr);
            rgb[i + 2] = to_u8(0.6 * g + 0.4 * b);
        }
    }
    return rgb;
}

}  // namespace lusgate
