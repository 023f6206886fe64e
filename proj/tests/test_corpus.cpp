#include "phishlab/corpus.hpp"
#include "phishlab/detector.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

using namespace phishlab;
namespace fs = std::filesystem;

namespace {

const Corpus& corpus() { return testkit::corpus0(); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("phishlab_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(SynthCorpus, BrandTableCounts) {
    // brand -> (pages, pages with a background image)
    const std::map<std::string, std::pair<int, int>> table{
        {"outlook", {1, 0}},   {"dhl", {1, 1}},      {"wellsfargo", {2, 2}}, {"capitalone", {1, 0}},
        {"amex", {1, 0}},      {"comcast", {1, 1}},  {"bt", {1, 1}},         {"alibaba", {1, 1}},
        {"swisscom", {1, 0}},  {"paypal", {2, 0}},   {"facebook", {3, 0}},   {"netflix", {1, 1}},
        {"ionos", {1, 0}},     {"spotify", {1, 0}},  {"instagram", {3, 2}},  {"microsoft", {1, 1}},
        {"yahoo", {1, 0}},     {"ebay", {1, 0}}};
    std::map<std::string, std::pair<int, int>> got;
    int with_bg = 0;
    for (const auto& p : corpus().pages) {
        auto& slot = got[p.brand];
        ++slot.first;
        if (p.has_kind(ElementKind::background)) {
            ++slot.second;
            ++with_bg;
        }
    }
    EXPECT_EQ(corpus().pages.size(), 24u);
    EXPECT_EQ(with_bg, 10);
    EXPECT_EQ(got, table);
    EXPECT_EQ(corpus().references.size(), 18u);
    EXPECT_EQ(corpus().benign_pages.size(), 18u);
    EXPECT_EQ(corpus().trusted.size(), 18u);
}

TEST(SynthCorpus, ExtendedSubsetShape) {
    int with_bg = 0;
    for (const auto& p : corpus().extended_pages) with_bg += p.has_kind(ElementKind::background);
    EXPECT_EQ(corpus().extended_pages.size(), 18u);
    EXPECT_EQ(with_bg, 11);
}

TEST(SynthCorpus, Deterministic) {
    const Corpus again = synth_corpus(0);
    EXPECT_EQ(corpus_fingerprint(again), corpus_fingerprint(corpus()));
    EXPECT_EQ(again.pages, corpus().pages);
    EXPECT_EQ(again.fullpage_threshold, corpus().fullpage_threshold);
    EXPECT_NE(corpus_fingerprint(synth_corpus(1)), corpus_fingerprint(corpus()));
}

TEST(SynthCorpus, PhishingDomainsAreNotLegitimate) {
    for (const auto& p : corpus().pages)
        EXPECT_FALSE(domain_in(corpus().references.at(p.brand).domains, p.hosting_domain)) << p.page_id;
    for (const auto& p : corpus().extended_pages)
        EXPECT_FALSE(domain_in(corpus().references.at(p.brand).domains, p.hosting_domain)) << p.page_id;
    for (const auto& p : corpus().benign_pages)
        EXPECT_TRUE(domain_in(corpus().references.at(p.brand).domains, p.hosting_domain)) << p.page_id;
}

TEST(SynthCorpus, FullRenderContainsReferenceLogo) {
    for (const auto& p : corpus().pages) {
        const Raster full = full_render(p, corpus().assets);
        const auto* logo = p.find("logo");
        ASSERT_NE(logo, nullptr);
        EXPECT_EQ(full.crop(logo->bbox), corpus().references.at(p.brand).logos.front()) << p.page_id;
    }
}

TEST(SynthCorpus, LogosAreMutuallyDistinct) {
    const DetectorConfig cfg;
    std::vector<std::pair<std::string, LogoHash>> hashes;
    for (const auto& [brand, ref] : corpus().references) hashes.emplace_back(brand, embed(ref.logos.front(), cfg));
    for (std::size_t i = 0; i < hashes.size(); ++i)
        for (std::size_t j = i + 1; j < hashes.size(); ++j)
            EXPECT_LT(similarity(hashes[i].second, hashes[j].second), cfg.theta)
                << hashes[i].first << " vs " << hashes[j].first;
}

TEST(SynthCorpus, Validates) {
    const auto diags = validate_corpus(corpus());
    for (const auto& d : diags) ADD_FAILURE() << d.str();
}

TEST(CorpusFiles, SaveLoadRoundTrip) {
    TempDir dir("corpus_rt");
    save_corpus(corpus(), dir.path);
    EXPECT_TRUE(fs::exists(dir.path / kManifestName));
    const Corpus back = load_corpus(dir.path);
    EXPECT_EQ(corpus_fingerprint(back), corpus_fingerprint(corpus()));
    EXPECT_EQ(back.pages, corpus().pages);
    EXPECT_EQ(back.benign_pages, corpus().benign_pages);
    EXPECT_EQ(back.extended_pages, corpus().extended_pages);
    EXPECT_DOUBLE_EQ(back.fullpage_threshold, corpus().fullpage_threshold);
    EXPECT_TRUE(validate_corpus(back).empty());
}

TEST(CorpusFiles, SavingTwiceGivesIdenticalBytes) {
    TempDir a("corpus_a"), b("corpus_b");
    save_corpus(corpus(), a.path);
    save_corpus(synth_corpus(0), b.path);
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a.path);
        ASSERT_TRUE(fs::exists(b.path / rel)) << rel;
        EXPECT_EQ(detail::read_text(entry.path()), detail::read_text(b.path / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 60u);
}

TEST(CorpusFiles, Errors) {
    EXPECT_THROW(save_corpus(corpus(), "/nonexistent_parent_dir/x/corpus"), CorpusError);
    TempDir dir("corpus_err");
    EXPECT_THROW(load_corpus(dir.path), CorpusError);
    fs::create_directories(dir.path);
    {
        std::ofstream(dir.path / kManifestName) << "{ not json";
    }
    EXPECT_THROW(load_corpus(dir.path), CorpusError);
}

TEST(CorpusFiles, MissingAssetIsReported) {
    TempDir dir("corpus_missing");
    save_corpus(corpus(), dir.path);
    std::size_t removed = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir.path))
        if (entry.path().filename() == "pic_dhl.png") removed += fs::remove(entry.path());
    ASSERT_EQ(removed, 1u);
    bool failed = false;
    try {
        const Corpus c = load_corpus(dir.path);
        failed = !validate_corpus(c).empty();
    } catch (const CorpusError&) {
        failed = true;
    }
    EXPECT_TRUE(failed);
}
