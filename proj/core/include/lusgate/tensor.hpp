#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lusgate {

// Dense numeric buffer with (height, width, channels) shape, channel-fastest
// layout. Flat vectors are represented as (1, 1, n).
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int height, int width, int channels)
        : h(height), w(width), c(channels), v(static_cast<std::size_t>(height) * width * channels, 0.0) {}

    static Tensor flat(int n) { return Tensor(1, 1, n); }

    int size() const { return h * w * c; }

    double& at(int y, int x, int ch) { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
    double at(int y, int x, int ch) const { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    double max_value() const {
        double m = v.empty() ? 0.0 : v[0];
        for (double x : v) m = std::max(m, x);
        return m;
    }

    double mean() const {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }
};

inline double mean_squared_diff(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        double d = a.v[i] - b.v[i];
        s += d * d;
    }
    return a.v.empty() ? 0.0 : s / static_cast<double>(a.v.size());
}

}  // namespace lusgate
