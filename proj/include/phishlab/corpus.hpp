#pragma once

// Seeded synthetic corpus: 24 phishing pages over 18 brands (10 with a
// background image), one benign twin per brand, an extra set of pages
// whose logos already miss the reference list, and the reference and
// trusted-page lists the detectors consume. Also the on-disk manifest
// format (JSON documents plus a PNG asset directory).

#include "phishlab/detector.hpp"
#include "phishlab/page_model.hpp"
#include "phishlab/png_io.hpp"
#include "phishlab/render.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phishlab {

struct Corpus {
    std::uint64_t seed = 0;
    std::vector<PageSpec> pages;           // ground-truth phishing
    std::vector<PageSpec> benign_pages;    // one legitimate twin per brand
    std::vector<PageSpec> extended_pages;  // phishing pages with off-reference logos
    AssetStore assets;
    ReferenceList references;
    TrustedPageList trusted;
    double fullpage_threshold = 0.10;

    const PageSpec* find_page(std::string_view id) const {
        for (const auto* list : {&pages, &benign_pages, &extended_pages})
            for (const auto& p : *list)
                if (p.page_id == id) return &p;
        return nullptr;
    }

    std::vector<PageSpec> all_pages() const {
        std::vector<PageSpec> all = pages;
        all.insert(all.end(), benign_pages.begin(), benign_pages.end());
        all.insert(all.end(), extended_pages.begin(), extended_pages.end());
        return all;
    }
};

namespace detail {

// Engine output only; std distributions are not portable across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    int uniform(int lo, int hi) {  // inclusive
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(eng_() % span);
    }
    bool coin() { return (eng_() & 1U) != 0; }
    std::uint8_t byte() { return static_cast<std::uint8_t>(eng_() & 0xff); }

private:
    std::mt19937_64 eng_;
};

inline int luma_of(Rgba c) { return luma(c.r, c.g, c.b); }

inline Rgba random_color(Rng& rng, int min_luma, int max_luma) {
    for (;;) {
        Rgba c{rng.byte(), rng.byte(), rng.byte(), 255};
        const int y = luma_of(c);
        if (y >= min_luma && y <= max_luma) return c;
    }
}

inline Rgba contrasting(Rng& rng, Rgba base, int min_delta) {
    for (;;) {
        Rgba c{rng.byte(), rng.byte(), rng.byte(), 255};
        if (std::abs(luma_of(c) - luma_of(base)) >= min_delta) return c;
    }
}

struct BrandSpec {
    const char* id;
    int pages;
    int with_background;
};

// Brand mix mirrors the evaluation set: 24 pages, 18 brands, 10 pages
// with a background image.
inline constexpr std::array<BrandSpec, 18> kBrands{{
    {"outlook", 1, 0},   {"dhl", 1, 1},      {"wellsfargo", 2, 2}, {"capitalone", 1, 0}, {"amex", 1, 0},
    {"comcast", 1, 1},   {"bt", 1, 1},       {"alibaba", 1, 1},    {"swisscom", 1, 0},   {"paypal", 2, 0},
    {"facebook", 3, 0},  {"netflix", 1, 1},  {"ionos", 1, 0},      {"spotify", 1, 0},    {"instagram", 3, 2},
    {"microsoft", 1, 1}, {"yahoo", 1, 0},    {"ebay", 1, 0},
}};

// Integer parabolic approximation of sin over a 16-bit phase; returns
// values in [-1024, 1024].
inline int smooth_wave(std::uint32_t phase) {
    const std::int64_t p = phase & 0xffff;
    const std::int64_t half = p & 0x7fff;
    const auto v = static_cast<int>(4 * half * (0x8000 - half) * 1024 / (std::int64_t{0x8000} * 0x8000));
    return p < 0x8000 ? v : -v;
}

// Three soft-edged 3x5 block glyphs over a smooth multi-color field. The
// smooth field keeps neighbouring hash samples from tying; soft glyph
// edges make pixelation damage grow steadily with the block size.
inline Raster make_logo(Rng& rng, Rgba avoid_a, Rgba avoid_b, std::optional<Rgba> plate_color = std::nullopt) {
    constexpr int kGlyphs = 3;
    constexpr int kCellW = 7;
    constexpr int kCellH = 5;
    constexpr int kSoft = 2;
    const int w = rng.uniform(72, 96);
    const int h = rng.uniform(26, 32);
    const Rgba plate = plate_color ? *plate_color : random_color(rng, 80, 180);

    struct Wave {
        int fx, fy, phase, amp, channel;
    };
    std::array<Wave, 4> waves{};
    for (auto& wv : waves) {
        // fx, fy in tenths of a cycle across the logo
        wv = {rng.uniform(5, 40), rng.uniform(0, 20), rng.uniform(0, 0xffff), rng.uniform(25, 50), rng.uniform(0, 2)};
    }
    Raster logo(w, h, plate);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<int, 3> delta{};
            for (const auto& wv : waves) {
                const auto phase = static_cast<std::uint32_t>(wv.phase + 65536LL * wv.fx * x / (10LL * w) +
                                                              65536LL * wv.fy * y / (10LL * h));
                delta[static_cast<std::size_t>(wv.channel)] += wv.amp * smooth_wave(phase) / 1024;
            }
            auto ch = [](std::uint8_t base, int d) { return static_cast<std::uint8_t>(std::clamp(base + d, 0, 255)); };
            logo.set(x, y, {ch(plate.r, delta[0]), ch(plate.g, delta[1]), ch(plate.b, delta[2]), 255});
        }
    }

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
    std::vector<Rgba> glyph_color(static_cast<std::size_t>(w), Rgba{});
    for (int g = 0; g < kGlyphs; ++g) {
        const int gx = 3 + g * 4 * kCellW;
        if (gx + 3 * kCellW > w - 3) break;
        const Rgba ink = contrasting(rng, plate, 80);
        for (int x = std::max(0, gx - kSoft); x < std::min(w, gx + 3 * kCellW + kSoft); ++x)
            glyph_color[static_cast<std::size_t>(x)] = ink;
        for (int cy = 0; cy < 5; ++cy) {
            for (int cx = 0; cx < 3; ++cx) {
                if (rng.uniform(0, 9) >= 5) continue;
                const int y0 = 2 + cy * kCellH;
                if (y0 + kCellH > h - 2) continue;
                for (int y = y0; y < y0 + kCellH; ++y)
                    for (int x = gx + cx * kCellW; x < gx + (cx + 1) * kCellW; ++x) mask[static_cast<std::size_t>(y) * w + x] = 1;
            }
        }
    }
    Raster out = logo;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int cover = 0;
            int n = 0;
            for (int dy = -kSoft; dy <= kSoft; ++dy)
                for (int dx = -kSoft; dx <= kSoft; ++dx) {
                    const int xx = x + dx;
                    const int yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                    cover += mask[static_cast<std::size_t>(yy) * w + xx];
                    ++n;
                }
            Rgba c = logo.at(x, y);
            if (cover > 0) {
                const Rgba ink = glyph_color[static_cast<std::size_t>(x)];
                auto mix = [&](std::uint8_t base, std::uint8_t top) {
                    return static_cast<std::uint8_t>((base * (n - cover) + top * cover + n / 2) / n);
                };
                c = {mix(c.r, ink.r), mix(c.g, ink.g), mix(c.b, ink.b), 255};
            }
            if (c == avoid_a || c == avoid_b) c.r ^= 1;
            out.set(x, y, c);
        }
    }
    return out;
}

inline Raster make_background(Rng& rng, int W, int H, Rgba base) {
    Raster bg(W, H, base);
    // Decoration stays below the header band so the header remains the
    // dominant color around the logo.
    const int shapes = rng.uniform(6, 10);
    for (int i = 0; i < shapes; ++i) {
        const int w = rng.uniform(80, 360);
        const int h = rng.uniform(40, 220);
        const int x = rng.uniform(0, W - w);
        const int y = rng.uniform(260, H - h);
        bg.fill_rect({x, y, w, h}, random_color(rng, 40, 230));
    }
    for (int y = 260; y + 3 <= H; y += rng.uniform(18, 40)) {
        const int x = rng.uniform(0, W / 2);
        bg.fill_rect({x, y, rng.uniform(40, W - x), 3}, random_color(rng, 30, 220));
    }
    return bg;
}

struct Layout {
    Bbox logo;
    Bbox heading;
    Bbox input1;
    Bbox input2;
    Bbox button;
    Bbox picture;
};

inline Layout make_layout(Rng& rng, int W, const Raster& logo, int jitter) {
    Layout l{};
    const int lx = rng.uniform(40, 420);
    const int ly = rng.uniform(30, 150);
    l.logo = {lx, ly, logo.width(), logo.height()};
    const int cx = rng.uniform(360, 560) + rng.uniform(-jitter, jitter);
    l.heading = {cx, 240 + rng.uniform(0, 20), rng.uniform(260, 420), 28};
    l.input1 = {cx, 320 + rng.uniform(-jitter / 2, jitter / 2), 360, 40};
    l.input2 = {cx, 390 + rng.uniform(-jitter / 2, jitter / 2), 360, 40};
    l.button = {cx, 470 + rng.uniform(-jitter / 2, jitter / 2), rng.uniform(120, 200), 44};
    // Brand illustration beside the form; its position is part of the brand
    // look, so kits copy it unchanged.
    const int pw = rng.uniform(260, 320);
    const int px = rng.coin() ? rng.uniform(10, 30) : W - pw - rng.uniform(10, 30);
    l.picture = {px, rng.uniform(260, 300), pw, rng.uniform(360, 440)};
    return l;
}

inline void jitter_layout(Rng& rng, Layout& l, int amount) {
    auto shift = [&](Bbox& b, int lo_y) {
        b.x = std::max(0, b.x + rng.uniform(-amount, amount));
        b.y = std::max(lo_y, b.y + rng.uniform(-amount / 2, amount / 2));
    };
    shift(l.heading, 230);
    shift(l.input1, 300);
    shift(l.input2, 370);
    shift(l.button, 450);
    l.heading.w = std::max(200, l.heading.w + rng.uniform(-60, 60));
}

inline Raster make_picture(Rng& rng, int w, int h) {
    const Rgba base = random_color(rng, 90, 200);
    std::array<std::array<int, 5>, 6> waves{};  // fx, fy, phase, amp, channel
    for (auto& wv : waves) wv = {rng.uniform(5, 30), rng.uniform(5, 30), rng.uniform(0, 0xffff), rng.uniform(40, 70), rng.uniform(0, 2)};
    Raster pic(w, h, base);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<int, 3> delta{};
            for (const auto& [fx, fy, phase, amp, channel] : waves) {
                const auto ph = static_cast<std::uint32_t>(phase + 65536LL * fx * x / (10LL * w) + 65536LL * fy * y / (10LL * h));
                delta[static_cast<std::size_t>(channel)] += amp * smooth_wave(ph) / 1024;
            }
            auto ch = [](std::uint8_t b, int d) { return static_cast<std::uint8_t>(std::clamp(b + d, 0, 255)); };
            pic.set(x, y, {ch(base.r, delta[0]), ch(base.g, delta[1]), ch(base.b, delta[2]), 255});
        }
    }
    for (int i = 0; i < 4; ++i) {
        const int bw = rng.uniform(30, w / 2);
        const int bh = rng.uniform(20, h / 3);
        pic.fill_rect({rng.uniform(0, w - bw), rng.uniform(0, h - bh), bw, bh}, random_color(rng, 20, 235));
    }
    return pic;
}

struct BrandAssets {
    std::string id;
    std::string logo_asset;
    std::string background_asset;  // empty when the brand has no background
    Rgba canvas_fill;
    Rgba ink;
    Rgba accent;
    Layout canonical;
    std::string legit_domain;
    std::string picture_asset;
};

inline PageSpec build_page(const std::string& page_id, const BrandAssets& b, const std::string& domain,
                           const Layout& l, bool with_background, const std::string& logo_asset,
                           Rng& rng, int W, int H) {
    PageSpec p;
    p.page_id = page_id;
    p.brand = b.id;
    p.hosting_domain = domain;
    p.canvas_width = W;
    p.canvas_height = H;
    p.canvas_fill = b.canvas_fill;
    p.normal_render_time_ms = 1000;
    if (with_background)
        p.elements.push_back({"background", ElementKind::background, {0, 0, W, H}, AssetRef{b.background_asset}, 0,
                              rng.uniform(0, 200)});
    p.elements.push_back({"logo", ElementKind::logo, l.logo, AssetRef{logo_asset}, 10, rng.uniform(100, 600)});
    p.elements.push_back({"heading", ElementKind::text, l.heading, b.ink, 5, rng.uniform(100, 800)});
    p.elements.push_back({"username", ElementKind::input, l.input1, Rgba{250, 250, 250, 255}, 5, rng.uniform(200, 900)});
    p.elements.push_back({"password", ElementKind::input, l.input2, Rgba{250, 250, 250, 255}, 5, rng.uniform(200, 900)});
    p.elements.push_back({"submit", ElementKind::button, l.button, b.accent, 5, rng.uniform(200, 900)});
    p.elements.push_back({"picture", ElementKind::image, l.picture, AssetRef{b.picture_asset}, 4, rng.uniform(200, 950)});
    return p;
}

inline std::string two_digit(int i) {
    return (i < 10 ? "0" : "") + std::to_string(i);
}

}  // namespace detail

struct SynthOptions {
    int canvas_width = 1280;
    int canvas_height = 800;
};

/// Deterministic function of `seed`.
inline Corpus synth_corpus(std::uint64_t seed, const SynthOptions& opts = {}) {
    using namespace detail;
    const int W = opts.canvas_width;
    const int H = opts.canvas_height;
    Corpus c;
    c.seed = seed;
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x5eed);

    std::vector<BrandAssets> brands;
    std::vector<Raster> logos;
    for (const auto& spec : kBrands) {
        BrandAssets b;
        b.id = spec.id;
        b.canvas_fill = random_color(rng, 225, 255);
        Rgba bg_base = random_color(rng, 150, 245);
        b.ink = random_color(rng, 10, 90);
        b.accent = random_color(rng, 40, 180);
        b.legit_domain = b.id + ".example.com";

        // Logos are redrawn until they stay well apart from every earlier
        // brand under the hash.
        Raster logo;
        for (;;) {
            logo = make_logo(rng, b.canvas_fill, bg_base);
            const auto h = embed(logo, DetectorConfig{});
            bool distinct = true;
            for (const auto& other : logos) distinct = distinct && similarity(h, embed(other, DetectorConfig{})) < 0.75;
            if (distinct) break;
        }
        logos.push_back(logo);
        b.logo_asset = "logo_" + b.id;
        c.assets.emplace(b.logo_asset, logo);
        if (spec.with_background > 0) {
            b.background_asset = "bg_" + b.id;
            c.assets.emplace(b.background_asset, make_background(rng, W, H, bg_base));
        }
        b.canonical = make_layout(rng, W, logo, 0);
        b.picture_asset = "pic_" + b.id;
        c.assets.emplace(b.picture_asset, make_picture(rng, b.canonical.picture.w, b.canonical.picture.h));

        BrandReference ref;
        ref.logos.push_back(logo);
        ref.domains = {b.legit_domain, "www." + b.legit_domain};
        c.references.emplace(b.id, std::move(ref));
        brands.push_back(std::move(b));
    }

    int page_no = 0;
    for (std::size_t bi = 0; bi < kBrands.size(); ++bi) {
        const auto& spec = kBrands[bi];
        const auto& b = brands[bi];
        for (int k = 0; k < spec.pages; ++k) {
            ++page_no;
            const std::string id = "p" + two_digit(page_no) + "_" + b.id;
            Layout l = b.canonical;
            jitter_layout(rng, l, 40);
            l.logo.x = std::clamp(l.logo.x + rng.uniform(-60, 60), 20, W - l.logo.w - 20);
            l.logo.y = std::clamp(l.logo.y + rng.uniform(-30, 30), 20, 196 - l.logo.h);
            const std::string domain = b.id + "-account-verify" + std::to_string(k + 1) + ".example.net";
            c.pages.push_back(build_page(id, b, domain, l, k < spec.with_background, b.logo_asset, rng, W, H));
        }
    }

    for (std::size_t bi = 0; bi < kBrands.size(); ++bi) {
        const auto& b = brands[bi];
        const std::string id = "benign_" + b.id;
        c.benign_pages.push_back(build_page(id, b, b.legit_domain, b.canonical, !b.background_asset.empty(),
                                            b.logo_asset, rng, W, H));
    }

    for (const auto& page : c.benign_pages) {
        const std::string asset = "trusted_" + page.brand;
        Raster shot = full_render(page, c.assets);
        c.trusted.push_back({page.brand, shot, c.references.at(page.brand).domains});
        c.assets.emplace(asset, std::move(shot));
    }

    // Pages whose logo no longer matches its reference: 18 pages over 13
    // brands, 11 with a background.
    const DetectorConfig dcfg;
    int ext_no = 0;
    int ext_bg = 0;
    for (std::size_t bi = 0; bi < 13; ++bi) {
        const auto& b = brands[bi];
        const int n = bi < 5 ? 2 : 1;
        for (int k = 0; k < n; ++k) {
            ++ext_no;
            const std::string id = "x" + two_digit(ext_no) + "_" + b.id;
            const Raster& base = c.assets.at(b.logo_asset);
            Raster restyled;
            do {
                restyled = make_logo(rng, b.canvas_fill, Rgba{}, base.at(0, 0));
            } while (best_brand(embed(restyled, dcfg), ReferenceIndex(c.references, dcfg)).score >= 0.80);
            const std::string logo_asset = "logo_" + id;
            c.assets.emplace(logo_asset, restyled);
            Layout l = b.canonical;
            jitter_layout(rng, l, 40);
            l.logo.w = restyled.width();
            l.logo.h = restyled.height();
            const bool bg_wanted = ext_bg < 11;
            BrandAssets bb = b;
            if (bg_wanted && bb.background_asset.empty()) {
                bb.background_asset = "bg_" + id;
                c.assets.emplace(bb.background_asset, make_background(rng, W, H, random_color(rng, 150, 245)));
            }
            ext_bg += bg_wanted ? 1 : 0;
            c.extended_pages.push_back(build_page(id, bb, b.id + "-support" + std::to_string(k + 1) + ".example.org", l,
                                                  bg_wanted, logo_asset, rng, W, H));
        }
    }

    std::vector<Raster> benign_shots;
    std::vector<Raster> phishing_shots;
    for (const auto& t : c.trusted) benign_shots.push_back(t.raster);
    for (const auto& p : c.pages) phishing_shots.push_back(full_render(p, c.assets));
    c.fullpage_threshold = calibrate_fullpage_threshold(c.trusted, benign_shots, phishing_shots, dcfg);
    return c;
}

// ---------------------------------------------------------------- manifest

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorpusError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write " + p.string());
    out << text;
    if (!out) throw CorpusError("short write to " + p.string());
}

inline nlohmann::ordered_json domains_json(const DomainSet& d) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : d) arr.push_back(s);
    return arr;
}

}  // namespace detail

inline constexpr const char* kManifestName = "manifest.json";

/// Writes pages/, assets/ and manifest.json under `dir`. The parent of
/// `dir` must exist.
inline void save_corpus(const Corpus& c, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!dir.parent_path().empty() && !fs::exists(dir.parent_path()))
        throw CorpusError("parent directory does not exist: " + dir.parent_path().string());
    fs::create_directories(dir / "pages");
    fs::create_directories(dir / "assets");
    nlohmann::ordered_json m;
    m["schema_version"] = 1;
    m["seed"] = c.seed;
    const auto& first = c.pages.empty() ? PageSpec{} : c.pages.front();
    m["canvas_width"] = first.canvas_width;
    m["canvas_height"] = first.canvas_height;
    auto write_list = [&](const std::vector<PageSpec>& pages) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : pages) {
            const std::string rel = "pages/" + p.page_id + ".json";
            detail::write_text(dir / rel, serialize_page_spec(p));
            arr.push_back(rel);
        }
        return arr;
    };
    m["pages"] = write_list(c.pages);
    m["benign_pages"] = write_list(c.benign_pages);
    m["extended_pages"] = write_list(c.extended_pages);
    auto refs = nlohmann::ordered_json::array();
    for (const auto& [brand, ref] : c.references) {
        nlohmann::ordered_json r;
        r["brand"] = brand;
        auto ids = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < ref.logos.size(); ++i) {
            // reference logos are stored as their own assets
            const std::string id = i == 0 ? "logo_" + brand : "logo_" + brand + "_" + std::to_string(i);
            ids.push_back(id);
        }
        r["logos"] = std::move(ids);
        r["domains"] = detail::domains_json(ref.domains);
        refs.push_back(std::move(r));
    }
    m["reference_list"] = std::move(refs);
    auto trusted = nlohmann::ordered_json::array();
    for (const auto& t : c.trusted)
        trusted.push_back({{"brand", t.brand}, {"asset", "trusted_" + t.brand}, {"domains", detail::domains_json(t.domains)}});
    m["trusted_pages"] = std::move(trusted);
    m["fullpage_threshold"] = c.fullpage_threshold;

    AssetStore all = c.assets;
    for (const auto& [brand, ref] : c.references)
        for (std::size_t i = 0; i < ref.logos.size(); ++i)
            all.insert_or_assign(i == 0 ? "logo_" + brand : "logo_" + brand + "_" + std::to_string(i), ref.logos[i]);
    for (const auto& [id, raster] : all) write_png(dir / "assets" / (id + ".png"), raster);
    detail::write_text(dir / kManifestName, m.dump(2) + "\n");
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(detail::read_text(dir / kManifestName));
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError("manifest: " + std::string(e.what()));
    }
    Corpus c;
    try {
        if (m.at("schema_version").get<int>() != 1) throw CorpusError("manifest: unsupported schema_version");
        c.seed = m.value("seed", std::uint64_t{0});
        for (const auto& entry : fs::directory_iterator(dir / "assets"))
            if (entry.path().extension() == ".png") c.assets.emplace(entry.path().stem().string(), read_png(entry.path()));
        auto read_list = [&](const char* key, std::vector<PageSpec>& out) {
            if (!m.contains(key)) return;
            for (const auto& rel : m.at(key)) {
                const auto path = dir / rel.get<std::string>();
                try {
                    out.push_back(parse_page_spec(detail::read_text(path)));
                } catch (const PageSpecError& e) {
                    throw CorpusError(path.string() + ": " + e.what());
                }
            }
        };
        read_list("pages", c.pages);
        read_list("benign_pages", c.benign_pages);
        read_list("extended_pages", c.extended_pages);
        for (const auto& r : m.at("reference_list")) {
            BrandReference ref;
            for (const auto& id : r.at("logos")) {
                auto it = c.assets.find(id.get<std::string>());
                if (it == c.assets.end()) throw CorpusError("reference logo asset missing: " + id.get<std::string>());
                ref.logos.push_back(it->second);
            }
            for (const auto& d : r.at("domains")) ref.domains.insert(d.get<std::string>());
            if (ref.logos.empty() || ref.domains.empty())
                throw CorpusError("reference entry needs at least one logo and one domain");
            c.references.emplace(r.at("brand").get<std::string>(), std::move(ref));
        }
        for (const auto& t : m.at("trusted_pages")) {
            TrustedPage tp;
            tp.brand = t.at("brand").get<std::string>();
            auto it = c.assets.find(t.at("asset").get<std::string>());
            if (it == c.assets.end()) throw CorpusError("trusted page asset missing: " + t.at("asset").get<std::string>());
            tp.raster = it->second;
            for (const auto& d : t.at("domains")) tp.domains.insert(d.get<std::string>());
            c.trusted.push_back(std::move(tp));
        }
        c.fullpage_threshold = m.value("fullpage_threshold", 0.10);
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError("manifest: " + std::string(e.what()));
    }
    return c;
}

/// Every page list plus asset resolution.
inline std::vector<Diagnostic> validate_corpus(const Corpus& c) {
    return validate_corpus(c.all_pages(), c.assets);
}

// ------------------------------------------------------------ fingerprints

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::uint8_t> data) {
        EVP_DigestUpdate(ctx_, data.data(), data.size());
        return *this;
    }
    Sha256& update(std::string_view s) {
        EVP_DigestUpdate(ctx_, s.data(), s.size());
        const char sep = '\0';
        EVP_DigestUpdate(ctx_, &sep, 1);
        return *this;
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, md.data(), &len);
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 15]);
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string corpus_fingerprint(const Corpus& c) {
    Sha256 h;
    for (const auto& p : c.all_pages()) h.update(serialize_page_spec(p));
    for (const auto& [id, r] : c.assets) {
        h.update(id);
        h.update(std::to_string(r.width()) + "x" + std::to_string(r.height()));
        h.update(r.bytes());
    }
    for (const auto& [brand, ref] : c.references) {
        h.update(brand);
        for (const auto& l : ref.logos) h.update(l.bytes());
        for (const auto& d : ref.domains) h.update(d);
    }
    for (const auto& t : c.trusted) {
        h.update(t.brand);
        h.update(t.raster.bytes());
    }
    return h.hex();
}

}  // namespace phishlab
