#pragma once

// Pixel-level effects used by the delayed-rendering attacks: bilinear
// downscale, nearest-neighbour upscale, block pixelation, curtain clipping
// and opaque-over compositing. All arithmetic is integral so results are
// byte-identical across platforms.

#include "phishlab/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace phishlab {

namespace detail {

// Source sample position for destination index `d` under center-aligned
// mapping, expressed as index + remainder/denominator.
struct Tap {
    int i0;
    int i1;
    std::int64_t frac;  // weight of i1, out of denom
};

inline std::vector<Tap> bilinear_taps(int src, int dst) {
    const std::int64_t denom = 2LL * dst;
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    for (int d = 0; d < dst; ++d) {
        // (d + 0.5) * src / dst - 0.5  ==  ((2d+1)*src - dst) / (2*dst)
        std::int64_t num = (2LL * d + 1) * src - dst;
        if (num < 0) num = 0;
        int i0 = static_cast<int>(num / denom);
        std::int64_t frac = num % denom;
        if (i0 >= src - 1) {
            i0 = src - 1;
            frac = 0;
        }
        taps[static_cast<std::size_t>(d)] = {i0, std::min(i0 + 1, src - 1), frac};
    }
    return taps;
}

}  // namespace detail

/// Each output pixel is the distance-weighted average of the four nearest
/// source pixels (center-aligned), rounded half-up per channel.
inline Raster bilinear_downscale(const Raster& src, int dw, int dh) {
    if (dw < 1 || dh < 1 || dw > src.width() || dh > src.height())
        throw std::out_of_range("bilinear_downscale: target " + std::to_string(dw) + "x" + std::to_string(dh) +
                                " outside [1.." + std::to_string(src.width()) + "]x[1.." +
                                std::to_string(src.height()) + "]");
    const auto xt = detail::bilinear_taps(src.width(), dw);
    const auto yt = detail::bilinear_taps(src.height(), dh);
    const std::int64_t dx_den = 2LL * dw;
    const std::int64_t dy_den = 2LL * dh;
    const std::int64_t total = dx_den * dy_den;

    Raster out(dw, dh);
    auto in = src.bytes();
    auto px = [&](int x, int y, int c) -> std::int64_t {
        return in[(static_cast<std::size_t>(y) * src.width() + x) * 4 + c];
    };
    for (int y = 0; y < dh; ++y) {
        const auto& ty = yt[static_cast<std::size_t>(y)];
        const std::int64_t wy1 = ty.frac;
        const std::int64_t wy0 = dy_den - wy1;
        auto orow = out.row(y);
        for (int x = 0; x < dw; ++x) {
            const auto& tx = xt[static_cast<std::size_t>(x)];
            const std::int64_t wx1 = tx.frac;
            const std::int64_t wx0 = dx_den - wx1;
            for (int c = 0; c < 4; ++c) {
                std::int64_t acc = wx0 * wy0 * px(tx.i0, ty.i0, c) + wx1 * wy0 * px(tx.i1, ty.i0, c) +
                                   wx0 * wy1 * px(tx.i0, ty.i1, c) + wx1 * wy1 * px(tx.i1, ty.i1, c);
                orow[static_cast<std::size_t>(x) * 4 + c] = static_cast<std::uint8_t>((2 * acc + total) / (2 * total));
            }
        }
    }
    return out;
}

/// Output pixel (x,y) copies source pixel (floor(x*sw/W), floor(y*sh/H)).
inline Raster nn_upscale(const Raster& src, int W, int H) {
    if (W < src.width() || H < src.height())
        throw std::out_of_range("nn_upscale: target " + std::to_string(W) + "x" + std::to_string(H) +
                                " smaller than source");
    Raster out(W, H);
    std::vector<int> xmap(static_cast<std::size_t>(W));
    for (int x = 0; x < W; ++x)
        xmap[static_cast<std::size_t>(x)] = static_cast<int>(static_cast<std::int64_t>(x) * src.width() / W);
    int prev_sy = -1;
    for (int y = 0; y < H; ++y) {
        int sy = static_cast<int>(static_cast<std::int64_t>(y) * src.height() / H);
        auto orow = out.row(y);
        if (sy == prev_sy) {
            auto above = out.row(y - 1);
            std::memcpy(orow.data(), above.data(), orow.size());
            continue;
        }
        auto srow = src.row(sy);
        for (int x = 0; x < W; ++x)
            std::memcpy(&orow[static_cast<std::size_t>(x) * 4], &srow[static_cast<std::size_t>(xmap[x]) * 4], 4);
        prev_sy = sy;
    }
    return out;
}

/// Downscale by 1/N (ceiling dimensions) then upscale back into NxN blocks.
inline Raster pixelate(const Raster& src, int block) {
    if (block < 1) throw std::invalid_argument("pixelate: block size must be >= 1");
    if (block == 1) return src;
    const int dw = (src.width() + block - 1) / block;
    const int dh = (src.height() + block - 1) / block;
    return nn_upscale(bilinear_downscale(src, dw, dh), src.width(), src.height());
}

/// Number of top rows a curtain at visibility `v` leaves visible.
inline int curtain_rows(int height, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::out_of_range("visibility must lie in [0,1]");
    return std::clamp(static_cast<int>(std::floor(v * height)), 0, height);
}

/// Keeps rows [0, floor(v*height)) and paints the rest with `fill`.
inline Raster curtain_mask(const Raster& src, double v, Rgba fill) {
    const int keep = curtain_rows(src.height(), v);
    Raster out = src;
    if (keep < src.height()) out.fill_rect({0, keep, src.width(), src.height() - keep}, fill);
    return out;
}

struct Layer {
    const Raster* raster;
    Bbox bbox;
    int z_order = 0;
};

/// Paints `img` into `canvas` at (x,y); alpha 0 leaves the destination,
/// any other alpha replaces it.
inline void paint_opaque(Raster& canvas, const Raster& img, int x, int y, int rows = -1) {
    if (rows < 0) rows = img.height();
    const Bbox box{x, y, img.width(), rows};
    if (rows == 0) return;
    if (!box.within(canvas.width(), canvas.height()) || rows > img.height())
        throw std::out_of_range("layer bbox outside canvas");
    for (int r = 0; r < rows; ++r) {
        auto src = img.row(r);
        auto dst = canvas.row(y + r).subspan(static_cast<std::size_t>(x) * 4, src.size());
        bool opaque = true;
        for (std::size_t i = 3; i < src.size(); i += 4)
            if (src[i] == 0) {
                opaque = false;
                break;
            }
        if (opaque) {
            std::memcpy(dst.data(), src.data(), src.size());
            continue;
        }
        for (std::size_t i = 0; i < src.size(); i += 4)
            if (src[i + 3] != 0) std::memcpy(&dst[i], &src[i], 4);
    }
}

/// Paints layers in ascending z_order (stable for ties) over a filled canvas.
inline Raster composite(Rgba canvas_fill, int W, int H, std::vector<Layer> layers) {
    Raster canvas(W, H, canvas_fill);
    for (const auto& l : layers) {
        if (!l.bbox.within(W, H)) throw std::out_of_range("composite: layer bbox outside canvas");
        if (l.raster->width() != l.bbox.w || l.raster->height() != l.bbox.h)
            throw std::invalid_argument("composite: layer raster does not match its bbox");
    }
    std::stable_sort(layers.begin(), layers.end(),
                     [](const Layer& a, const Layer& b) { return a.z_order < b.z_order; });
    for (const auto& l : layers) paint_opaque(canvas, *l.raster, l.bbox.x, l.bbox.y);
    return canvas;
}

}  // namespace phishlab
