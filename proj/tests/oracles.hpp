#pragma once

// Straightforward floating-point reference resamplers, written from the
// textbook definitions and kept separate from the integer implementations.

#include "phishlab/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace phishlab::oracle {

inline Raster bilinear(const Raster& src, int dw, int dh) {
    const int sw = src.width();
    const int sh = src.height();
    Raster out(dw, dh);
    for (int y = 0; y < dh; ++y) {
        double sy = (y + 0.5) * sh / dh - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            double sx = (x + 0.5) * sw / dw - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            auto ch = [&](int xx, int yy, int c) {
                const Rgba p = src.at(xx, yy);
                return static_cast<double>(c == 0 ? p.r : c == 1 ? p.g : c == 2 ? p.b : p.a);
            };
            std::uint8_t v[4];
            for (int c = 0; c < 4; ++c) {
                const double top = ch(x0, y0, c) * (1 - fx) + ch(x1, y0, c) * fx;
                const double bot = ch(x0, y1, c) * (1 - fx) + ch(x1, y1, c) * fx;
                v[c] = static_cast<std::uint8_t>(std::floor(top * (1 - fy) + bot * fy + 0.5));
            }
            out.set(x, y, {v[0], v[1], v[2], v[3]});
        }
    }
    return out;
}

inline Raster nearest(const Raster& src, int W, int H) {
    Raster out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) out.set(x, y, src.at(x * src.width() / W, y * src.height() / H));
    return out;
}

inline Raster pixelate(const Raster& src, int n) {
    const int dw = (src.width() + n - 1) / n;
    const int dh = (src.height() + n - 1) / n;
    return nearest(bilinear(src, dw, dh), src.width(), src.height());
}

inline Raster curtain(const Raster& src, double v, Rgba fill) {
    Raster out = src;
    const int keep = static_cast<int>(std::floor(v * src.height()));
    for (int y = keep; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x) out.set(x, y, fill);
    return out;
}

inline int max_channel_diff(const Raster& a, const Raster& b) {
    if (a.width() != b.width() || a.height() != b.height()) return 1 << 20;
    int worst = 0;
    auto pa = a.bytes();
    auto pb = b.bytes();
    for (std::size_t i = 0; i < pa.size(); ++i) worst = std::max(worst, std::abs(int(pa[i]) - int(pb[i])));
    return worst;
}

// Difference hash computed in doubles: BT.601 luma, box-centred bilinear
// sampling onto (g+1) x g, one bit per horizontal neighbour pair.
inline std::vector<bool> dhash(const Raster& img, int g) {
    int w = img.width();
    int h = img.height();
    std::vector<double> gray(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Rgba p = img.at(x, y);
            gray[static_cast<std::size_t>(y) * w + x] = std::floor(0.299 * p.r + 0.587 * p.g + 0.114 * p.b + 0.5);
        }
    if (w < g + 1 || h < g) {
        const int nw = std::max(w, g + 1);
        const int nh = std::max(h, g);
        std::vector<double> big(static_cast<std::size_t>(nw) * nh);
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x) big[static_cast<std::size_t>(y) * nw + x] = gray[static_cast<std::size_t>(y * h / nh) * w + x * w / nw];
        gray = std::move(big);
        w = nw;
        h = nh;
    }
    auto sample = [&](double sx, double sy) {
        sx = std::clamp(sx, 0.0, w - 1.0);
        sy = std::clamp(sy, 0.0, h - 1.0);
        const int x0 = static_cast<int>(sx);
        const int y0 = static_cast<int>(sy);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double fx = sx - x0;
        const double fy = sy - y0;
        auto at = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
        return (at(x0, y0) * (1 - fx) + at(x1, y0) * fx) * (1 - fy) + (at(x0, y1) * (1 - fx) + at(x1, y1) * fx) * fy;
    };
    std::vector<bool> bits;
    for (int y = 0; y < g; ++y) {
        const double sy = (y + 0.5) * h / g - 0.5;
        for (int x = 0; x < g; ++x) {
            const double a = std::floor(sample((x + 0.5) * w / (g + 1) - 0.5, sy) + 0.5);
            const double b = std::floor(sample((x + 1.5) * w / (g + 1) - 0.5, sy) + 0.5);
            bits.push_back(a > b);
        }
    }
    return bits;
}

inline double hash_similarity(const std::vector<bool>& a, const std::vector<bool>& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace phishlab::oracle
