#include "phishlab/page_model.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace phishlab;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "page_id": "p1",
  "brand": "acme",
  "hosting_domain": "acme-login.example.net",
  "canvas_width": 200,
  "canvas_height": 100,
  "canvas_fill": "#ffffffff",
  "elements": [
    {"element_id": "logo", "kind": "logo", "bbox": {"x": 10, "y": 10, "w": 40, "h": 20},
     "asset_ref": "logo_acme", "z_order": 1, "base_appear_time_ms": 100}
  ]
})";

PageSpec minimal() { return parse_page_spec(kMinimal); }

PageSpecError::Kind error_kind(const std::string& text) {
    try {
        parse_page_spec(text);
    } catch (const PageSpecError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for: " << text;
    return PageSpecError::Kind::syntax;
}

std::string with(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(PageSpecParse, MinimalDocument) {
    const PageSpec p = minimal();
    EXPECT_EQ(p.page_id, "p1");
    ASSERT_EQ(p.elements.size(), 1u);
    EXPECT_EQ(p.elements[0].kind, ElementKind::logo);
    EXPECT_EQ(p.elements[0].bbox, (Bbox{10, 10, 40, 20}));
    ASSERT_NE(p.elements[0].asset(), nullptr);
    EXPECT_EQ(p.elements[0].asset()->id, "logo_acme");
    EXPECT_EQ(p.normal_render_time_ms, 1000);
}

TEST(PageSpecParse, DuplicateElementIdIsSchemaError) {
    const std::string dup = with(kMinimal, "\n  ]",
                                 R"(,
    {"element_id": "logo", "kind": "text", "bbox": {"x": 0, "y": 0, "w": 5, "h": 5},
     "color": "#000000ff", "z_order": 0, "base_appear_time_ms": 0}
  ])");
    EXPECT_EQ(error_kind(dup), PageSpecError::Kind::schema);
}

TEST(PageSpecParse, SyntaxErrorReportsPosition) {
    try {
        parse_page_spec("{\n  \"schema_version\": 1,\n  \"page_id\" \"p\"\n}");
        FAIL();
    } catch (const PageSpecError& e) {
        EXPECT_EQ(e.kind(), PageSpecError::Kind::syntax);
        EXPECT_EQ(e.line(), 3u);
        EXPECT_GT(e.column(), 1u);
    }
}

TEST(PageSpecParse, SchemaViolations) {
    EXPECT_EQ(error_kind(with(kMinimal, "\"schema_version\": 1", "\"schema_version\": 2")), PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"kind\": \"logo\"", "\"kind\": \"banner\"")), PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"brand\": \"acme\",", "")), PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"brand\": \"acme\",", "\"brand\": \"acme\", \"extra\": 1,")),
              PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"canvas_width\": 200", "\"canvas_width\": \"200\"")), PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"asset_ref\": \"logo_acme\"", "\"asset_ref\": \"x\", \"color\": \"#000000ff\"")),
              PageSpecError::Kind::schema);
    EXPECT_EQ(error_kind(with(kMinimal, "\"#ffffffff\"", "\"#fff\"")), PageSpecError::Kind::schema);
}

TEST(PageSpecParse, InvariantViolations) {
    EXPECT_EQ(error_kind(with(kMinimal, "\"w\": 40", "\"w\": 400")), PageSpecError::Kind::invariant);
    EXPECT_EQ(error_kind(with(kMinimal, "\"base_appear_time_ms\": 100", "\"base_appear_time_ms\": -1")),
              PageSpecError::Kind::invariant);
}

TEST(PageSpecParse, RoundTripOnCorpus) {
    const auto& c = testkit::corpus0();
    for (const auto& p : c.all_pages()) {
        const PageSpec back = parse_page_spec(serialize_page_spec(p));
        EXPECT_EQ(back, p) << p.page_id;
        EXPECT_EQ(serialize_page_spec(back), serialize_page_spec(p));
    }
}

TEST(CheckPage, Diagnostics) {
    PageSpec p = minimal();
    EXPECT_TRUE(check_page(p).empty());
    p.elements.push_back({"bg", ElementKind::background, {0, 0, 100, 100}, Rgba{}, 0, 0});
    auto d = check_page(p);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].element_id, "bg");
    p.elements.back().bbox = {0, 0, 200, 100};
    p.elements.push_back({"bg2", ElementKind::background, {0, 0, 200, 100}, Rgba{}, 0, 0});
    d = check_page(p);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].message.find("more than one background"), std::string::npos);
}

TEST(ValidateCorpus, ShippedCorpusIsClean) {
    const auto diags = validate_corpus(testkit::corpus0());
    for (const auto& d : diags) ADD_FAILURE() << d.str();
}

TEST(ValidateCorpus, DanglingAssetNamesPageAndElement) {
    PageSpec p = minimal();
    AssetStore assets;
    const auto d = validate_corpus({p}, assets);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].page_id, "p1");
    EXPECT_EQ(d[0].element_id, "logo");
    EXPECT_EQ(d[0].str(), "p1/logo: asset_ref 'logo_acme' does not resolve");
}

TEST(ValidateCorpus, BboxExceedingCanvas) {
    PageSpec p = minimal();
    p.elements[0].bbox = {180, 10, 40, 20};
    AssetStore assets{{"logo_acme", Raster(40, 20)}};
    const auto d = validate_corpus({p}, assets);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].message, "bbox exceeds canvas");
}

TEST(ValidateCorpus, AssetSizeAndDuplicatePages) {
    PageSpec p = minimal();
    AssetStore assets{{"logo_acme", Raster(41, 20)}};
    auto d = validate_corpus({p}, assets);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].message.find("size differs"), std::string::npos);
    assets.insert_or_assign("logo_acme", Raster(40, 20));
    d = validate_corpus({p, p}, assets);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].message.find("duplicate page_id"), std::string::npos);
}
