#pragma once

// Simulated visual phishing detectors. A horizontal difference hash with
// normalized Hamming similarity stands in for a learned logo embedding; the
// decision structure (localize, argmax match above theta, domain check) is
// the part the attacks target, and that part is kept intact.

#include "phishlab/page_model.hpp"
#include "phishlab/render.hpp"
#include "phishlab/transforms.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace phishlab {

using DomainSet = std::set<std::string, std::less<>>;

struct BrandReference {
    std::vector<Raster> logos;
    DomainSet domains;
};

/// brand -> reference logos + legitimate domains, ordered by brand name.
using ReferenceList = std::map<std::string, BrandReference, std::less<>>;

struct TrustedPage {
    std::string brand;
    Raster raster;
    DomainSet domains;
};

using TrustedPageList = std::vector<TrustedPage>;

enum class Localization { oracle, naive };

struct DetectorConfig {
    double theta = 0.87;
    int hash_grid = 16;
    double detectability_min_fraction = 0.05;
    double fullpage_threshold = 0.10;
    Localization localization = Localization::oracle;
    // Naive localization ignores connected regions smaller than this.
    int naive_min_area = 64;
};

enum class Label { benign, phishing };

inline std::string_view to_string(Label l) { return l == Label::phishing ? "phishing" : "benign"; }

struct Verdict {
    Label label = Label::benign;
    std::optional<std::string> matched_brand;
    double score = 0.0;
};

/// Packed bit vector of hash_grid*hash_grid difference bits.
class LogoHash {
public:
    LogoHash() = default;
    explicit LogoHash(std::size_t bits) : size_(bits), words_((bits + 63) / 64, 0) {}

    std::size_t size() const { return size_; }
    bool bit(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
    void set(std::size_t i, bool on) {
        if (on) words_[i / 64] |= std::uint64_t{1} << (i % 64);
        else words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
    }

    LogoHash inverted() const {
        LogoHash out = *this;
        for (std::size_t i = 0; i < size_; ++i) out.set(i, !bit(i));
        return out;
    }

    friend std::size_t hamming(const LogoHash& a, const LogoHash& b) {
        if (a.size_ != b.size_) throw std::invalid_argument("hash length mismatch");
        std::size_t d = 0;
        for (std::size_t w = 0; w < a.words_.size(); ++w) d += static_cast<std::size_t>(std::popcount(a.words_[w] ^ b.words_[w]));
        return d;
    }

    friend bool operator==(const LogoHash&, const LogoHash&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

inline Raster to_gray(const Raster& img) {
    Raster out(img.width(), img.height());
    auto in = img.bytes();
    auto o = out.bytes();
    for (std::size_t i = 0; i < in.size(); i += 4) {
        const std::uint8_t y = luma(in[i], in[i + 1], in[i + 2]);
        o[i] = o[i + 1] = o[i + 2] = y;
        o[i + 3] = 255;
    }
    return out;
}

/// Horizontal difference hash: integer luma, bilinear downscale to
/// (g+1) x g, bit set where a pixel is brighter than its right neighbour.
/// Inputs smaller than the hash grid are first enlarged by pixel
/// replication.
inline LogoHash embed(const Raster& img, const DetectorConfig& cfg) {
    const int g = cfg.hash_grid;
    if (g < 2) throw std::invalid_argument("hash_grid must be >= 2");
    Raster gray = to_gray(img);
    if (gray.width() < g + 1 || gray.height() < g)
        gray = nn_upscale(gray, std::max(gray.width(), g + 1), std::max(gray.height(), g));
    const Raster small = bilinear_downscale(gray, g + 1, g);
    LogoHash h(static_cast<std::size_t>(g) * g);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x)
            h.set(static_cast<std::size_t>(y) * g + x, small.at(x, y).r > small.at(x + 1, y).r);
    return h;
}

inline double similarity(const LogoHash& a, const LogoHash& b) {
    if (a.size() != b.size() || a.size() == 0) throw std::invalid_argument("similarity: hash length mismatch");
    return 1.0 - static_cast<double>(hamming(a, b)) / static_cast<double>(a.size());
}

/// Reference logos pre-hashed for one hash configuration.
class ReferenceIndex {
public:
    struct Entry {
        std::string brand;
        std::size_t index;
        LogoHash hash;
    };

    ReferenceIndex(const ReferenceList& ref, const DetectorConfig& cfg) : ref_(&ref) {
        if (ref.empty()) throw std::invalid_argument("reference list is empty");
        for (const auto& [brand, entry] : ref)
            for (std::size_t i = 0; i < entry.logos.size(); ++i) entries_.push_back({brand, i, embed(entry.logos[i], cfg)});
    }

    const std::vector<Entry>& entries() const { return entries_; }
    const ReferenceList& list() const { return *ref_; }

private:
    const ReferenceList* ref_;
    std::vector<Entry> entries_;
};

struct BrandMatch {
    std::string brand;
    double score = 0.0;
};

/// Best-scoring brand for a hash, ties going to the lexicographically
/// first brand and then the lowest reference index. Returned regardless of
/// the threshold.
inline BrandMatch best_brand(const LogoHash& h, const ReferenceIndex& index) {
    BrandMatch best{"", -1.0};
    for (const auto& e : index.entries()) {
        const double s = similarity(h, e.hash);
        if (s > best.score) best = {e.brand, s};
    }
    return best;
}

inline std::optional<BrandMatch> match_brand(const Raster& logo, const ReferenceIndex& index,
                                             const DetectorConfig& cfg) {
    auto best = best_brand(embed(logo, cfg), index);
    if (best.score >= cfg.theta) return best;
    return std::nullopt;
}

inline std::optional<BrandMatch> match_brand(const Raster& logo, const ReferenceList& ref, const DetectorConfig& cfg) {
    return match_brand(logo, ReferenceIndex(ref, cfg), cfg);
}

/// Pixels a logo's bbox would show if the logo were absent.
struct LogoUnderlay {
    std::string element_id;
    Bbox bbox;
    Raster region;
};

inline std::vector<LogoUnderlay> compute_underlays(const PageSpec& page, const AssetStore& assets) {
    int settle = page.normal_render_time_ms;
    for (const auto& e : page.elements) settle = std::max(settle, e.base_appear_time_ms);
    std::vector<LogoUnderlay> out;
    for (const auto& e : page.elements) {
        if (e.kind != ElementKind::logo) continue;
        Raster without = render_at(page, assets, no_attack(), settle, {e.element_id});
        out.push_back({e.element_id, e.bbox, without.crop(e.bbox)});
    }
    return out;
}

inline double differing_fraction(const Raster& shot, const LogoUnderlay& u) {
    long long diff = 0;
    for (int y = 0; y < u.bbox.h; ++y) {
        auto a = shot.row(u.bbox.y + y).subspan(static_cast<std::size_t>(u.bbox.x) * 4, static_cast<std::size_t>(u.bbox.w) * 4);
        auto b = u.region.row(y);
        for (std::size_t i = 0; i < a.size(); i += 4)
            if (a[i] != b[i] || a[i + 1] != b[i + 1] || a[i + 2] != b[i + 2] || a[i + 3] != b[i + 3]) ++diff;
    }
    return static_cast<double>(diff) / static_cast<double>(u.bbox.area());
}

/// Oracle localization: logo bboxes whose screenshot region differs from
/// the underlay on at least the detectability fraction of pixels.
inline std::vector<Bbox> locate_logos_oracle(const Raster& shot, std::span<const LogoUnderlay> underlays,
                                             const DetectorConfig& cfg) {
    std::vector<Bbox> out;
    for (const auto& u : underlays) {
        if (!u.bbox.within(shot.width(), shot.height())) continue;
        if (differing_fraction(shot, u) >= cfg.detectability_min_fraction) out.push_back(u.bbox);
    }
    return out;
}

/// Most frequent color on a 4-pixel sampling grid; ties go to the smaller
/// packed value.
inline Rgba dominant_color(const Raster& img) {
    std::unordered_map<std::uint32_t, int> counts;
    for (int y = 0; y < img.height(); y += 4)
        for (int x = 0; x < img.width(); x += 4) ++counts[img.at(x, y).packed()];
    std::uint32_t best = 0;
    int best_n = -1;
    for (const auto& [c, n] : counts)
        if (n > best_n || (n == best_n && c < best)) {
            best = c;
            best_n = n;
        }
    return {static_cast<std::uint8_t>(best >> 24), static_cast<std::uint8_t>(best >> 16),
            static_cast<std::uint8_t>(best >> 8), static_cast<std::uint8_t>(best)};
}

/// Naive localization: bounding boxes of 4-connected regions that differ
/// from the dominant (fill) color and reach into the top quarter of the
/// canvas, in scan order.
inline std::vector<Bbox> locate_logos_naive(const Raster& shot, const DetectorConfig& cfg) {
    const int W = shot.width();
    const int H = shot.height();
    const std::uint32_t fill = dominant_color(shot).packed();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(W) * H, 0);
    auto bytes = shot.bytes();
    auto is_fg = [&](std::size_t idx) {
        const std::uint8_t* p = &bytes[idx * 4];
        const std::uint32_t c = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
        return c != fill;
    };
    const int top_rows = (H + 3) / 4;
    std::vector<Bbox> out;
    std::vector<std::size_t> stack;
    for (int y0 = 0; y0 < top_rows; ++y0) {
        for (int x0 = 0; x0 < W; ++x0) {
            const std::size_t start = static_cast<std::size_t>(y0) * W + x0;
            if (seen[start] || !is_fg(start)) continue;
            int minx = x0, maxx = x0, miny = y0, maxy = y0;
            long long count = 0;
            seen[start] = 1;
            stack.assign(1, start);
            while (!stack.empty()) {
                const std::size_t idx = stack.back();
                stack.pop_back();
                ++count;
                const int x = static_cast<int>(idx % W);
                const int y = static_cast<int>(idx / W);
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                auto visit = [&](int nx, int ny) {
                    if (nx < 0 || ny < 0 || nx >= W || ny >= H) return;
                    const std::size_t n = static_cast<std::size_t>(ny) * W + nx;
                    if (seen[n] || !is_fg(n)) return;
                    seen[n] = 1;
                    stack.push_back(n);
                };
                visit(x - 1, y);
                visit(x + 1, y);
                visit(x, y - 1);
                visit(x, y + 1);
            }
            Bbox box{minx, miny, maxx - minx + 1, maxy - miny + 1};
            if (box.area() >= cfg.naive_min_area) out.push_back(box);
        }
    }
    return out;
}

class DetectorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ground-truth page geometry for oracle localization.
struct PageContext {
    const PageSpec* page = nullptr;
    std::vector<LogoUnderlay> underlays;

    PageContext() = default;
    PageContext(const PageSpec& p, const AssetStore& assets) : page(&p), underlays(compute_underlays(p, assets)) {}
};

inline std::vector<Bbox> locate_logos(const Screenshot& shot, const PageContext* page, const DetectorConfig& cfg) {
    if (cfg.localization == Localization::naive) return locate_logos_naive(shot.raster, cfg);
    if (!page || !page->page) throw DetectorError("oracle localization requires the page spec");
    return locate_logos_oracle(shot.raster, page->underlays, cfg);
}

inline bool domain_in(const DomainSet& domains, std::string_view domain) {
    return domains.find(domain) != domains.end();
}

/// Logo pipeline: localize, match each candidate, keep the best match,
/// then the domain check decides.
inline Verdict detect_logo_based(const Screenshot& shot, std::string_view page_domain, const PageContext* page,
                                 const ReferenceIndex& index, const DetectorConfig& cfg) {
    std::optional<BrandMatch> best;
    for (const auto& box : locate_logos(shot, page, cfg)) {
        auto m = match_brand(shot.raster.crop(box), index, cfg);
        if (!m) continue;
        if (!best || m->score > best->score || (m->score == best->score && m->brand < best->brand)) best = m;
    }
    if (!best) return {Label::benign, std::nullopt, 0.0};
    const auto& brand_ref = index.list().at(best->brand);
    if (domain_in(brand_ref.domains, page_domain)) return {Label::benign, best->brand, best->score};
    return {Label::phishing, best->brand, best->score};
}

/// Whole-page hashes of the trusted list.
class TrustedIndex {
public:
    TrustedIndex(const TrustedPageList& trusted, const DetectorConfig& cfg) : trusted_(&trusted) {
        if (trusted.empty()) throw DetectorError("trusted page list is empty");
        for (const auto& t : trusted) hashes_.push_back(embed(t.raster, cfg));
    }

    const TrustedPageList& list() const { return *trusted_; }
    const std::vector<LogoHash>& hashes() const { return hashes_; }

    struct Nearest {
        std::size_t index;
        double distance;
    };

    /// Minimum-distance entry; first index wins ties. `skip_identical`
    /// excludes entries whose raster equals `img` exactly.
    Nearest nearest(const Raster& img, const LogoHash& h, bool skip_identical = false) const {
        Nearest best{trusted_->size(), std::numeric_limits<double>::infinity()};
        for (std::size_t i = 0; i < hashes_.size(); ++i) {
            if (skip_identical && (*trusted_)[i].raster == img) continue;
            const double d = 1.0 - similarity(h, hashes_[i]);
            if (d < best.distance) best = {i, d};
        }
        return best;
    }

private:
    const TrustedPageList* trusted_;
    std::vector<LogoHash> hashes_;
};

inline Verdict detect_full_page(const Screenshot& shot, std::string_view page_domain, const TrustedIndex& trusted,
                                const DetectorConfig& cfg) {
    const auto near = trusted.nearest(shot.raster, embed(shot.raster, cfg));
    const auto& entry = trusted.list()[near.index];
    if (near.distance < cfg.fullpage_threshold && !domain_in(entry.domains, page_domain))
        return {Label::phishing, entry.brand, near.distance};
    return {Label::benign, std::nullopt, near.distance};
}

/// Largest threshold that keeps every benign sample (compared against the
/// trusted entries other than itself) from falling under it; that value
/// also catches the maximum number of phishing samples.
inline double calibrate_fullpage_threshold(const TrustedPageList& trusted, const std::vector<Raster>& benign,
                                           const std::vector<Raster>& phishing, const DetectorConfig& cfg) {
    if (trusted.empty() || benign.empty() || phishing.empty())
        throw DetectorError("calibration needs trusted, benign and phishing samples");
    const TrustedIndex index(trusted, cfg);
    double limit = 1.0 + 1e-9;
    for (const auto& b : benign) {
        auto near = index.nearest(b, embed(b, cfg), true);
        if (near.index < trusted.size()) limit = std::min(limit, near.distance);
    }
    return limit;
}

}  // namespace phishlab
