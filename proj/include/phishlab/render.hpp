#pragma once

#include "phishlab/attack.hpp"
#include "phishlab/page_model.hpp"
#include "phishlab/transforms.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace phishlab {

struct Screenshot {
    Raster raster;
    int capture_time_ms = 0;
    std::string page_id;
    std::string variant_id;
};

struct CaptureConfig {
    int capture_time_ms = 2000;
    int count = 5;
    int interval_ms = 1000;
    int initial_delay_ms = 0;
};

class RenderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool targets_element(Target target, ElementKind kind) {
    switch (target) {
        case Target::logo: return kind == ElementKind::logo;
        case Target::background: return kind == ElementKind::background;
        case Target::both: return kind == ElementKind::logo || kind == ElementKind::background;
    }
    return false;
}

struct RenderOptions {
    // Element left out of the render, used to build logo underlays.
    std::string omit_element;
};

/// Screenshot content at instant `t_ms`. Targeted elements are pixelated
/// first, then only their top floor(v*h) rows are painted so concealed
/// rows show whatever lies beneath.
inline Raster render_at(const PageSpec& page, const AssetStore& assets, const AttackScript& script, int t_ms,
                        const RenderOptions& opts = {}) {
    if (t_ms < 0) throw std::invalid_argument("render time must be non-negative");
    if (auto diags = check_page(page); !diags.empty()) throw RenderError("invalid page: " + diags.front().str());

    std::vector<const ElementSpec*> order;
    for (const auto& e : page.elements)
        if (e.base_appear_time_ms <= t_ms && e.element_id != opts.omit_element) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(),
                     [](const ElementSpec* a, const ElementSpec* b) { return a->z_order < b->z_order; });

    const EffectState effect = effect_at(script, t_ms);
    Raster canvas(page.canvas_width, page.canvas_height, page.canvas_fill);
    for (const ElementSpec* e : order) {
        const bool attacked = targets_element(script.target, e->kind) && !effect.is_identity();
        const Raster* src = nullptr;
        Raster solid;
        if (const auto* a = e->asset()) {
            auto it = assets.find(a->id);
            if (it == assets.end())
                throw RenderError(page.page_id + "/" + e->element_id + ": unresolved asset '" + a->id + "'");
            src = &it->second;
            if (src->width() != e->bbox.w || src->height() != e->bbox.h)
                throw RenderError(page.page_id + "/" + e->element_id + ": asset size differs from bbox");
        } else {
            if (!attacked) {
                canvas.fill_rect(e->bbox, std::get<Rgba>(e->content));
                continue;
            }
            solid = Raster(e->bbox.w, e->bbox.h, std::get<Rgba>(e->content));
            src = &solid;
        }
        if (!attacked) {
            paint_opaque(canvas, *src, e->bbox.x, e->bbox.y);
            continue;
        }
        const int rows = curtain_rows(e->bbox.h, effect.v);
        if (rows == 0) continue;
        if (effect.block > 1) {
            Raster pix = pixelate(*src, effect.block);
            paint_opaque(canvas, pix, e->bbox.x, e->bbox.y, rows);
        } else {
            paint_opaque(canvas, *src, e->bbox.x, e->bbox.y, rows);
        }
    }
    return canvas;
}

/// The page as it looks once normal rendering has finished.
inline Raster full_render(const PageSpec& page, const AssetStore& assets) {
    return render_at(page, assets, no_attack(), page.normal_render_time_ms);
}

inline Screenshot capture(const PageSpec& page, const AssetStore& assets, const AttackScript& script,
                          const CaptureConfig& cfg, std::string variant_id = "none") {
    if (cfg.capture_time_ms < 0) throw std::invalid_argument("capture time must be non-negative");
    return {render_at(page, assets, script, cfg.capture_time_ms), cfg.capture_time_ms, page.page_id,
            std::move(variant_id)};
}

/// K screenshots at initial_delay + k*interval.
inline std::vector<Screenshot> capture_sequence(const PageSpec& page, const AssetStore& assets,
                                                const AttackScript& script, const CaptureConfig& cfg,
                                                const std::string& variant_id = "none") {
    if (cfg.count < 1) throw std::invalid_argument("capture sequence needs at least one screenshot");
    if (cfg.interval_ms <= 0) throw std::invalid_argument("capture interval must be positive");
    if (cfg.initial_delay_ms < 0) throw std::invalid_argument("initial delay must be non-negative");
    std::vector<Screenshot> out;
    for (int k = 0; k < cfg.count; ++k) {
        const int t = cfg.initial_delay_ms + k * cfg.interval_ms;
        out.push_back({render_at(page, assets, script, t), t, page.page_id, variant_id});
    }
    return out;
}

inline std::string static_effect_label(const EffectState& e) {
    if (e.block > 1 && e.v < 1.0) return combined_label(e.block, e.v);
    if (e.block > 1) return pixel_label(e.block);
    return curtain_label(e.v);
}

/// Applies the effect to the whole screenshot: pixelate, then conceal the
/// bottom rows with white.
inline Screenshot static_perturb(const Screenshot& shot, const EffectState& effect) {
    if (!effect.valid()) throw std::invalid_argument("effect state out of range");
    Screenshot out = shot;
    out.raster = curtain_mask(pixelate(shot.raster, effect.block), effect.v, Rgba{255, 255, 255, 255});
    out.variant_id = shot.variant_id + "+static:" + static_effect_label(effect);
    return out;
}

inline std::string screenshot_filename(const std::string& page_id, const std::string& variant_id, int t_ms) {
    return page_id + "__" + variant_id + "__t" + std::to_string(t_ms) + ".png";
}

}  // namespace phishlab
