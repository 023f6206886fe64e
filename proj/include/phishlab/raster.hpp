#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phishlab {

struct Rgba {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    std::uint8_t a = 255;

    friend bool operator==(const Rgba&, const Rgba&) = default;

    std::uint32_t packed() const {
        return (std::uint32_t(r) << 24) | (std::uint32_t(g) << 16) | (std::uint32_t(b) << 8) | a;
    }
};

// Parses "#RRGGBBAA" (leading '#' optional).
inline Rgba parse_hex_color(std::string_view text) {
    if (!text.empty() && text.front() == '#') text.remove_prefix(1);
    if (text.size() != 8) throw std::invalid_argument("color must be 8 hex digits: " + std::string(text));
    std::array<std::uint8_t, 4> ch{};
    for (std::size_t i = 0; i < 4; ++i) {
        int v = 0;
        for (std::size_t k = 0; k < 2; ++k) {
            char c = text[2 * i + k];
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else throw std::invalid_argument("bad hex digit in color: " + std::string(text));
            v = v * 16 + d;
        }
        ch[i] = static_cast<std::uint8_t>(v);
    }
    return {ch[0], ch[1], ch[2], ch[3]};
}

inline std::string to_hex_color(Rgba c) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#";
    for (std::uint8_t v : {c.r, c.g, c.b, c.a}) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 15]);
    }
    return out;
}

/// Axis-aligned pixel rectangle; `x`,`y` is the top-left corner.
struct Bbox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    friend bool operator==(const Bbox&, const Bbox&) = default;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return static_cast<long long>(w) * h; }

    bool within(int width, int height) const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && right() <= width && bottom() <= height;
    }
    bool overlaps(const Bbox& o) const {
        return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
    }
};

/// Row-major RGBA8 image. The buffer always holds exactly width*height*4 bytes.
class Raster {
public:
    Raster() = default;

    Raster(int width, int height, Rgba fill = {0, 0, 0, 255}) : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                                        std::to_string(height));
        pixels_.resize(static_cast<std::size_t>(width) * height * 4);
        this->fill(fill);
    }

    Raster(int width, int height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be >= 1");
        if (pixels_.size() != static_cast<std::size_t>(width) * height * 4)
            throw std::invalid_argument("raster buffer length does not match width*height*4");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    std::span<const std::uint8_t> bytes() const { return pixels_; }
    std::span<std::uint8_t> bytes() { return pixels_; }

    Rgba at(int x, int y) const {
        const std::uint8_t* p = &pixels_[offset(x, y)];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(int x, int y, Rgba c) {
        std::uint8_t* p = &pixels_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }

    std::span<const std::uint8_t> row(int y) const {
        return std::span(pixels_).subspan(offset(0, y), static_cast<std::size_t>(width_) * 4);
    }
    std::span<std::uint8_t> row(int y) {
        return std::span(pixels_).subspan(offset(0, y), static_cast<std::size_t>(width_) * 4);
    }

    void fill(Rgba c) {
        for (std::size_t i = 0; i < pixels_.size(); i += 4) {
            pixels_[i] = c.r;
            pixels_[i + 1] = c.g;
            pixels_[i + 2] = c.b;
            pixels_[i + 3] = c.a;
        }
    }

    /// Fills the part of `box` that lies inside the raster.
    void fill_rect(const Bbox& box, Rgba c) {
        const int x0 = std::max(box.x, 0);
        const int x1 = std::min(box.right(), width_);
        const int y0 = std::max(box.y, 0);
        const int y1 = std::min(box.bottom(), height_);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) set(x, y, c);
    }

    Raster crop(const Bbox& box) const {
        if (!box.within(width_, height_)) throw std::out_of_range("crop box outside raster");
        Raster out(box.w, box.h);
        for (int y = 0; y < box.h; ++y) {
            auto src = row(box.y + y).subspan(static_cast<std::size_t>(box.x) * 4, static_cast<std::size_t>(box.w) * 4);
            std::memcpy(out.row(y).data(), src.data(), src.size());
        }
        return out;
    }

    friend bool operator==(const Raster& a, const Raster& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
    }

private:
    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 4;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

}  // namespace phishlab
