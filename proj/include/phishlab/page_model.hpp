#pragma once

// Declarative webpage model: pages are a canvas plus an ordered list of
// rectangular elements that each show either a raster asset or a solid
// color and appear at a fixed time during normal rendering.

#include "phishlab/raster.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phishlab {

inline constexpr int kPageSchemaVersion = 1;

enum class ElementKind { logo, background, text, input, button, image };

inline std::string_view to_string(ElementKind k) {
    switch (k) {
        case ElementKind::logo: return "logo";
        case ElementKind::background: return "background";
        case ElementKind::text: return "text";
        case ElementKind::input: return "input";
        case ElementKind::button: return "button";
        case ElementKind::image: return "image";
    }
    return "?";
}

inline std::optional<ElementKind> parse_element_kind(std::string_view s) {
    for (auto k : {ElementKind::logo, ElementKind::background, ElementKind::text, ElementKind::input,
                   ElementKind::button, ElementKind::image})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

struct AssetRef {
    std::string id;
    friend bool operator==(const AssetRef&, const AssetRef&) = default;
};

using ElementContent = std::variant<AssetRef, Rgba>;

struct ElementSpec {
    std::string element_id;
    ElementKind kind = ElementKind::image;
    Bbox bbox;
    ElementContent content = Rgba{};
    int z_order = 0;
    int base_appear_time_ms = 0;

    friend bool operator==(const ElementSpec&, const ElementSpec&) = default;

    const AssetRef* asset() const { return std::get_if<AssetRef>(&content); }
};

struct PageSpec {
    std::string page_id;
    std::string brand;
    std::string hosting_domain;
    int canvas_width = 1280;
    int canvas_height = 800;
    Rgba canvas_fill{255, 255, 255, 255};
    std::vector<ElementSpec> elements;
    int normal_render_time_ms = 1000;

    friend bool operator==(const PageSpec&, const PageSpec&) = default;

    const ElementSpec* find(std::string_view element_id) const {
        for (const auto& e : elements)
            if (e.element_id == element_id) return &e;
        return nullptr;
    }
    bool has_kind(ElementKind k) const {
        for (const auto& e : elements)
            if (e.kind == k) return true;
        return false;
    }
};

/// Immutable-after-load map of asset id to raster.
using AssetStore = std::map<std::string, Raster, std::less<>>;

struct Diagnostic {
    std::string page_id;
    std::string element_id;  // empty when the problem is page-level
    std::string message;

    std::string str() const {
        std::string s = page_id.empty() ? "<corpus>" : page_id;
        if (!element_id.empty()) s += "/" + element_id;
        return s + ": " + message;
    }
};

class PageSpecError : public std::runtime_error {
public:
    enum class Kind { syntax, schema, invariant };

    PageSpecError(Kind kind, const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), kind_(kind), line_(line), column_(column) {}

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    Kind kind_;
    std::size_t line_;
    std::size_t column_;
};

/// Checks the structural invariants of a single page. Asset resolution is
/// left to validate_corpus.
inline std::vector<Diagnostic> check_page(const PageSpec& page) {
    std::vector<Diagnostic> out;
    auto add = [&](std::string element, std::string msg) {
        out.push_back({page.page_id, std::move(element), std::move(msg)});
    };
    if (page.page_id.empty()) add("", "page_id is empty");
    if (page.canvas_width < 1 || page.canvas_height < 1) add("", "canvas dimensions must be positive");
    if (page.normal_render_time_ms < 0) add("", "normal_render_time_ms is negative");
    std::set<std::string, std::less<>> ids;
    int backgrounds = 0;
    for (const auto& e : page.elements) {
        if (e.element_id.empty()) add("", "element with empty element_id");
        else if (!ids.insert(e.element_id).second) add(e.element_id, "duplicate element_id");
        if (e.bbox.w <= 0 || e.bbox.h <= 0) add(e.element_id, "bbox width and height must be positive");
        else if (!e.bbox.within(page.canvas_width, page.canvas_height)) add(e.element_id, "bbox exceeds canvas");
        if (e.base_appear_time_ms < 0) add(e.element_id, "base_appear_time_ms is negative");
        if (const auto* a = e.asset(); a && a->id.empty()) add(e.element_id, "empty asset_ref");
        if (e.kind == ElementKind::background) {
            if (++backgrounds == 2) add(e.element_id, "more than one background element");
            if (e.bbox != Bbox{0, 0, page.canvas_width, page.canvas_height})
                add(e.element_id, "background bbox must cover the full canvas");
        }
    }
    return out;
}

/// Empty iff every page invariant holds, page ids are unique, and every
/// asset reference resolves to a raster of the element's bbox size.
inline std::vector<Diagnostic> validate_corpus(const std::vector<PageSpec>& pages, const AssetStore& assets) {
    std::vector<Diagnostic> out;
    std::set<std::string, std::less<>> page_ids;
    for (const auto& page : pages) {
        if (!page.page_id.empty() && !page_ids.insert(page.page_id).second)
            out.push_back({page.page_id, "", "duplicate page_id in corpus"});
        auto diags = check_page(page);
        out.insert(out.end(), diags.begin(), diags.end());
        for (const auto& e : page.elements) {
            const auto* a = e.asset();
            if (!a || a->id.empty()) continue;
            auto it = assets.find(a->id);
            if (it == assets.end()) {
                out.push_back({page.page_id, e.element_id, "asset_ref '" + a->id + "' does not resolve"});
            } else if (it->second.width() != e.bbox.w || it->second.height() != e.bbox.h) {
                out.push_back({page.page_id, e.element_id, "asset '" + a->id + "' size differs from bbox"});
            }
        }
    }
    return out;
}

namespace detail {

inline void require_keys(const nlohmann::json& obj, std::string_view where,
                         std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional = {}) {
    using K = PageSpecError::Kind;
    if (!obj.is_object()) throw PageSpecError(K::schema, std::string(where) + ": expected an object");
    for (auto key : required)
        if (!obj.contains(key)) throw PageSpecError(K::schema, std::string(where) + ": missing field '" + std::string(key) + "'");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (auto k : required) known = known || k == key;
        for (auto k : optional) known = known || k == key;
        if (!known) throw PageSpecError(K::schema, std::string(where) + ": unknown field '" + key + "'");
    }
}

inline int get_int(const nlohmann::json& obj, const char* key, std::string_view where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw PageSpecError(PageSpecError::Kind::schema, std::string(where) + "." + key + ": expected an integer");
    return v.get<int>();
}

inline std::string get_string(const nlohmann::json& obj, const char* key, std::string_view where) {
    const auto& v = obj.at(key);
    if (!v.is_string())
        throw PageSpecError(PageSpecError::Kind::schema, std::string(where) + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline Rgba get_color(const nlohmann::json& obj, const char* key, std::string_view where) {
    auto s = get_string(obj, key, where);
    try {
        return parse_hex_color(s);
    } catch (const std::invalid_argument& e) {
        throw PageSpecError(PageSpecError::Kind::schema, std::string(where) + "." + key + ": " + e.what());
    }
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

inline nlohmann::ordered_json page_to_json(const PageSpec& page) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kPageSchemaVersion;
    doc["page_id"] = page.page_id;
    doc["brand"] = page.brand;
    doc["hosting_domain"] = page.hosting_domain;
    doc["canvas_width"] = page.canvas_width;
    doc["canvas_height"] = page.canvas_height;
    doc["canvas_fill"] = to_hex_color(page.canvas_fill);
    doc["normal_render_time_ms"] = page.normal_render_time_ms;
    auto elements = nlohmann::ordered_json::array();
    for (const auto& e : page.elements) {
        nlohmann::ordered_json j;
        j["element_id"] = e.element_id;
        j["kind"] = std::string(to_string(e.kind));
        j["bbox"] = {{"x", e.bbox.x}, {"y", e.bbox.y}, {"w", e.bbox.w}, {"h", e.bbox.h}};
        if (const auto* a = e.asset()) j["asset_ref"] = a->id;
        else j["color"] = to_hex_color(std::get<Rgba>(e.content));
        j["z_order"] = e.z_order;
        j["base_appear_time_ms"] = e.base_appear_time_ms;
        elements.push_back(std::move(j));
    }
    doc["elements"] = std::move(elements);
    return doc;
}

inline std::string serialize_page_spec(const PageSpec& page) {
    return page_to_json(page).dump(2) + "\n";
}

inline PageSpec page_from_json(const nlohmann::json& doc) {
    using K = PageSpecError::Kind;
    detail::require_keys(doc, "page",
                         {"schema_version", "page_id", "brand", "hosting_domain", "canvas_width", "canvas_height",
                          "canvas_fill", "elements"},
                         {"normal_render_time_ms"});
    if (detail::get_int(doc, "schema_version", "page") != kPageSchemaVersion)
        throw PageSpecError(K::schema, "page.schema_version: unsupported version");
    PageSpec page;
    page.page_id = detail::get_string(doc, "page_id", "page");
    page.brand = detail::get_string(doc, "brand", "page");
    page.hosting_domain = detail::get_string(doc, "hosting_domain", "page");
    page.canvas_width = detail::get_int(doc, "canvas_width", "page");
    page.canvas_height = detail::get_int(doc, "canvas_height", "page");
    page.canvas_fill = detail::get_color(doc, "canvas_fill", "page");
    if (doc.contains("normal_render_time_ms"))
        page.normal_render_time_ms = detail::get_int(doc, "normal_render_time_ms", "page");

    const auto& elements = doc.at("elements");
    if (!elements.is_array()) throw PageSpecError(K::schema, "page.elements: expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const auto& j = elements[i];
        const std::string where = "elements[" + std::to_string(i) + "]";
        detail::require_keys(j, where, {"element_id", "kind", "bbox", "z_order", "base_appear_time_ms"},
                             {"asset_ref", "color"});
        ElementSpec e;
        e.element_id = detail::get_string(j, "element_id", where);
        if (!ids.insert(e.element_id).second)
            throw PageSpecError(K::schema, where + ": duplicate element_id '" + e.element_id + "'");
        auto kind = parse_element_kind(detail::get_string(j, "kind", where));
        if (!kind) throw PageSpecError(K::schema, where + ".kind: unknown element kind");
        e.kind = *kind;
        const auto& bb = j.at("bbox");
        detail::require_keys(bb, where + ".bbox", {"x", "y", "w", "h"});
        e.bbox = {detail::get_int(bb, "x", where), detail::get_int(bb, "y", where), detail::get_int(bb, "w", where),
                  detail::get_int(bb, "h", where)};
        const bool has_asset = j.contains("asset_ref");
        const bool has_color = j.contains("color");
        if (has_asset == has_color)
            throw PageSpecError(K::schema, where + ": exactly one of asset_ref or color is required");
        if (has_asset) e.content = AssetRef{detail::get_string(j, "asset_ref", where)};
        else e.content = detail::get_color(j, "color", where);
        e.z_order = detail::get_int(j, "z_order", where);
        e.base_appear_time_ms = detail::get_int(j, "base_appear_time_ms", where);
        page.elements.push_back(std::move(e));
    }
    if (auto diags = check_page(page); !diags.empty()) throw PageSpecError(K::invariant, diags.front().str());
    return page;
}

inline PageSpec parse_page_spec(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw PageSpecError(PageSpecError::Kind::syntax,
                            "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col), line,
                            col);
    }
    return page_from_json(doc);
}

}  // namespace phishlab
