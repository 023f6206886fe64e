#pragma once

// Delayed-rendering attack scripts: keyframed timelines of visibility and
// pixel-block size, and the enumerator for the standard variant matrix.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phishlab {

enum class AttackKind { none, curtain, pixelation, combined };
enum class Target { logo, background, both };

inline std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::curtain: return "curtain";
        case AttackKind::pixelation: return "pixelation";
        case AttackKind::combined: return "combined";
    }
    return "?";
}

inline std::string_view to_string(Target t) {
    switch (t) {
        case Target::logo: return "logo";
        case Target::background: return "background";
        case Target::both: return "both";
    }
    return "?";
}

inline std::optional<AttackKind> parse_attack_kind(std::string_view s) {
    for (auto k : {AttackKind::none, AttackKind::curtain, AttackKind::pixelation, AttackKind::combined})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

inline std::optional<Target> parse_target(std::string_view s) {
    for (auto t : {Target::logo, Target::background, Target::both})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

/// Visibility fraction `v` of the element (top rows) and pixel block size
/// `block` (1 = sharp).
struct EffectState {
    double v = 1.0;
    int block = 1;

    friend bool operator==(const EffectState&, const EffectState&) = default;

    bool valid() const { return v >= 0.0 && v <= 1.0 && block >= 1; }
    bool is_identity() const { return v == 1.0 && block == 1; }
};

struct Keyframe {
    int t_ms = 0;
    EffectState state;
    friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct AttackScript {
    AttackKind attack_kind = AttackKind::none;
    Target target = Target::logo;
    int total_render_time_ms = 0;
    std::vector<Keyframe> keyframes{{0, {}}};

    friend bool operator==(const AttackScript&, const AttackScript&) = default;
};

inline AttackScript no_attack() { return {}; }

/// Returns an empty string when the script is well formed, otherwise the
/// first violated invariant.
inline std::string check_script(const AttackScript& s) {
    if (s.keyframes.empty()) return "script has no keyframes";
    if (s.keyframes.front().t_ms != 0) return "first keyframe must be at t=0";
    for (std::size_t i = 0; i < s.keyframes.size(); ++i) {
        if (!s.keyframes[i].state.valid()) return "keyframe state out of range";
        if (i > 0 && s.keyframes[i].t_ms <= s.keyframes[i - 1].t_ms) return "keyframe times must strictly increase";
    }
    if (!s.keyframes.back().state.is_identity()) return "final keyframe must be fully rendered";
    if (s.attack_kind == AttackKind::none && s.keyframes.size() != 1) return "no-attack script must have one keyframe";
    return {};
}

namespace detail {

// Five stages at floor(k*T/4), k = 0..4.
inline std::vector<int> stage_times(int total_ms) {
    if (total_ms < 4)
        throw std::invalid_argument("total render time must be >= 4 ms to hold five distinct stages, got " +
                                    std::to_string(total_ms));
    std::vector<int> t;
    for (int k = 0; k <= 4; ++k) t.push_back(static_cast<int>(static_cast<std::int64_t>(k) * total_ms / 4));
    return t;
}

}  // namespace detail

inline AttackScript curtain_schedule(int total_ms, Target target = Target::logo) {
    const auto t = detail::stage_times(total_ms);
    AttackScript s{AttackKind::curtain, target, total_ms, {}};
    for (int k = 0; k <= 4; ++k) s.keyframes.push_back({t[static_cast<std::size_t>(k)], {k / 4.0, 1}});
    return s;
}

inline AttackScript pixelation_schedule(int total_ms, Target target = Target::logo) {
    const auto t = detail::stage_times(total_ms);
    AttackScript s{AttackKind::pixelation, target, total_ms, {}};
    for (int k = 0; k <= 4; ++k) s.keyframes.push_back({t[static_cast<std::size_t>(k)], {1.0, 5 - k}});
    return s;
}

/// Holds pixel block `block` constant while stepping through `v_stages`,
/// then resolves to the full render at `total_ms`.
inline AttackScript combined_schedule(int total_ms, int block, const std::vector<double>& v_stages,
                                      Target target = Target::logo) {
    if (block < 2 || block > 5) throw std::invalid_argument("combined block size must be in {2,3,4,5}");
    if (v_stages.empty()) throw std::invalid_argument("combined schedule needs at least one visibility stage");
    for (std::size_t i = 0; i < v_stages.size(); ++i) {
        const double v = v_stages[i];
        if (v != 0.0 && v != 0.25 && v != 0.5 && v != 0.75)
            throw std::invalid_argument("combined visibility stages must come from {0, 0.25, 0.5, 0.75}");
        if (i > 0 && v <= v_stages[i - 1]) throw std::invalid_argument("combined visibility stages must be sorted");
    }
    const auto m = static_cast<std::int64_t>(v_stages.size());
    if (total_ms < m) throw std::invalid_argument("total render time too short for the stage count");
    AttackScript s{AttackKind::combined, target, total_ms, {}};
    for (std::int64_t i = 0; i < m; ++i)
        s.keyframes.push_back({static_cast<int>(i * total_ms / m), {v_stages[static_cast<std::size_t>(i)], block}});
    s.keyframes.push_back({total_ms, {1.0, 1}});
    return s;
}

/// Zero-order hold: the latest keyframe at or before t, fully rendered
/// past the end of the script.
inline EffectState effect_at(const AttackScript& script, int t_ms) {
    if (t_ms >= script.total_render_time_ms && script.attack_kind != AttackKind::none) return {};
    EffectState state{};
    for (const auto& kf : script.keyframes) {
        if (kf.t_ms > t_ms) break;
        state = kf.state;
    }
    return state;
}

struct Variant {
    std::string id;
    AttackScript script;
    std::string intensity;  // e.g. "v=0.25", "N=5", "N=5&v=0.25"
};

struct VariantConfig {
    std::vector<Target> targets{Target::logo, Target::background, Target::both};
    int capture_time_ms = 2000;
};

inline std::string format_visibility(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string curtain_label(double v) { return "v=" + format_visibility(v); }
inline std::string pixel_label(int block) { return "N=" + std::to_string(block); }
inline std::string combined_label(int block, double v) { return pixel_label(block) + "&" + curtain_label(v); }

inline std::string variant_id(AttackKind kind, Target target, const std::string& intensity, int total_ms) {
    return std::string(to_string(kind)) + "-" + std::string(to_string(target)) + "-" + intensity + "-T" +
           std::to_string(total_ms);
}

/// Curtain script whose capture-time stage shows visibility `v` (a multiple
/// of 0.25) when captured at `capture_ms`.
inline AttackScript curtain_at_capture(double v, int capture_ms, Target target) {
    const int k = static_cast<int>(v * 4);
    // v=0 keeps the capture inside the first quarter; otherwise land on stage k
    const int total = k == 0 ? 8 * capture_ms : (4 * capture_ms + k - 1) / k;
    return curtain_schedule(total, target);
}

inline AttackScript pixelation_at_capture(int block, int capture_ms, Target target) {
    const int k = 5 - block;
    const int total = k == 0 ? 8 * capture_ms : (4 * capture_ms + k - 1) / k;
    return pixelation_schedule(total, target);
}

/// Default configuration yields 60 variants: per target 4 curtain, 4
/// pixelation and 12 combined intensities, in that order.
inline std::vector<Variant> enumerate_variants(const VariantConfig& cfg = {}) {
    if (cfg.capture_time_ms < 1) throw std::invalid_argument("capture time must be >= 1 ms to stage variants");
    std::vector<Variant> out;
    const int c = cfg.capture_time_ms;
    for (Target target : cfg.targets) {
        for (double v : {0.0, 0.25, 0.5, 0.75}) {
            auto s = curtain_at_capture(v, c, target);
            auto label = curtain_label(v);
            out.push_back({variant_id(s.attack_kind, target, label, s.total_render_time_ms), s, label});
        }
        for (int n : {5, 4, 3, 2}) {
            auto s = pixelation_at_capture(n, c, target);
            auto label = pixel_label(n);
            out.push_back({variant_id(s.attack_kind, target, label, s.total_render_time_ms), s, label});
        }
        for (int n : {5, 4, 3, 2}) {
            for (double v : {0.25, 0.5, 0.75}) {
                auto s = combined_schedule(2 * c, n, {v}, target);
                auto label = combined_label(n, v);
                out.push_back({variant_id(s.attack_kind, target, label, s.total_render_time_ms), s, label});
            }
        }
    }
    return out;
}

inline nlohmann::ordered_json variant_to_json(const Variant& v) {
    nlohmann::ordered_json j;
    j["variant_id"] = v.id;
    j["attack_kind"] = std::string(to_string(v.script.attack_kind));
    j["target"] = std::string(to_string(v.script.target));
    j["intensity"] = v.intensity;
    j["total_render_time_ms"] = v.script.total_render_time_ms;
    auto kfs = nlohmann::ordered_json::array();
    for (const auto& kf : v.script.keyframes) kfs.push_back({{"t_ms", kf.t_ms}, {"v", kf.state.v}, {"N", kf.state.block}});
    j["keyframes"] = std::move(kfs);
    return j;
}

inline Variant variant_from_json(const nlohmann::json& j) {
    Variant v;
    v.id = j.at("variant_id").get<std::string>();
    auto kind = parse_attack_kind(j.at("attack_kind").get<std::string>());
    auto target = parse_target(j.at("target").get<std::string>());
    if (!kind || !target) throw std::invalid_argument("variant " + v.id + ": unknown attack kind or target");
    v.intensity = j.at("intensity").get<std::string>();
    v.script.attack_kind = *kind;
    v.script.target = *target;
    v.script.total_render_time_ms = j.at("total_render_time_ms").get<int>();
    v.script.keyframes.clear();
    for (const auto& kf : j.at("keyframes"))
        v.script.keyframes.push_back({kf.at("t_ms").get<int>(), {kf.at("v").get<double>(), kf.at("N").get<int>()}});
    if (auto err = check_script(v.script); !err.empty()) throw std::invalid_argument("variant " + v.id + ": " + err);
    return v;
}

/// Variant manifest: one JSON document listing every variant in order.
inline std::string variants_to_manifest(const std::vector<Variant>& variants) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : variants) arr.push_back(variant_to_json(v));
    doc["variants"] = std::move(arr);
    return doc.dump(2) + "\n";
}

inline std::vector<Variant> variants_from_manifest(std::string_view text) {
    auto doc = nlohmann::json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) throw std::invalid_argument("unsupported variant manifest version");
    std::vector<Variant> out;
    for (const auto& j : doc.at("variants")) out.push_back(variant_from_json(j));
    return out;
}

}  // namespace phishlab
