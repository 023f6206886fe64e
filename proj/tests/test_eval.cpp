#include "phishlab/eval.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace phishlab;

namespace {

const Corpus& corpus() { return testkit::corpus0(); }

std::vector<DetectorSpec> detectors(std::vector<std::string> names) {
    return select_detectors(default_detectors(DetectorConfig{}, corpus().fullpage_threshold), names);
}

std::vector<Variant> logo_variants() { return enumerate_variants({.targets = {Target::logo}}); }

// One shared live run over the logo-target variants.
const EvalReport& logo_report() {
    static const EvalReport r = run_matrix(corpus(), logo_variants(), detectors({"logo", "fullpage"}), {});
    return r;
}

std::vector<Verdict> verdicts_of(int benign, int phishing) {
    std::vector<Verdict> v(static_cast<std::size_t>(benign), Verdict{Label::benign, std::nullopt, 0});
    v.insert(v.end(), static_cast<std::size_t>(phishing), Verdict{Label::phishing, "x", 1});
    return v;
}

EvalReport sample_report() {
    EvalReport r;
    r.mode = "live";
    r.corpus_fingerprint = "abc";
    r.config_fingerprint = "def";
    r.baseline = {{"logo", 24, 0.0}, {"fullpage", 24, 1.0 / 24}};
    r.rows = {{"logo", "curtain", "logo", "v=0", "curtain-logo-v=0-T16000", 24, 1.0, 1.0},
              {"fullpage", "pixelation", "both", "N=5", "pixelation-both-N=5-T8000", 24, 0.0, -1.0 / 24},
              {"logo", "combined", "background", "N=5&v=0.25", "combined-background-N=5&v=0.25-T4000", 24, 7.0 / 24, 7.0 / 24}};
    return r;
}

}  // namespace

TEST(Metrics, Fnr) {
    EXPECT_EQ(compute_fnr(verdicts_of(0, 24)), 0.0);
    EXPECT_EQ(compute_fnr(verdicts_of(24, 0)), 1.0);
    EXPECT_EQ(format_fixed4(compute_fnr(verdicts_of(7, 17))), "0.2917");
    EXPECT_THROW(compute_fnr({}), std::invalid_argument);
}

TEST(Metrics, Asr) {
    EXPECT_DOUBLE_EQ(compute_asr(0.58, 0.0), 0.58);
    EXPECT_EQ(compute_asr(0.3, 0.3), 0.0);
    EXPECT_EQ(compute_asr(1.0, 0.0), 1.0);
    EXPECT_LT(compute_asr(0.25, 0.5), 0.0);
    EXPECT_THROW(compute_asr(1.1, 0.0), std::invalid_argument);
    EXPECT_THROW(compute_asr(0.5, -0.1), std::invalid_argument);
}

TEST(Detectors, SelectionByName) {
    EXPECT_EQ(detectors({}).size(), 4u);
    const auto two = detectors({"fullpage", "logo"});
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].name, "fullpage");
    EXPECT_EQ(two[0].cfg.fullpage_threshold, corpus().fullpage_threshold);
    EXPECT_THROW(detectors({"siamese"}), std::invalid_argument);
}

TEST(RunMatrix, NoneVariantGivesZeroAsr) {
    Variant none{"none-again", no_attack(), "-"};
    const auto r = run_matrix(corpus(), {none}, detectors({}), {});
    ASSERT_EQ(r.rows.size(), 4u);
    for (const auto& row : r.rows) EXPECT_EQ(row.asr, 0.0) << row.detector;
    EXPECT_EQ(r.find_baseline("logo")->fnr, 0.0);
}

TEST(RunMatrix, LogoTargetRows) {
    const auto& r = logo_report();
    EXPECT_EQ(r.rows.size(), 20u * 2);
    EXPECT_EQ(r.verdicts.size(), 24u * 21 * 2);
    EXPECT_EQ(r.find_baseline("logo")->fnr, 0.0);
    const auto* invisible = r.find_row("logo", "curtain", "logo", "v=0");
    ASSERT_NE(invisible, nullptr);
    EXPECT_EQ(invisible->fnr, 1.0);
    EXPECT_EQ(invisible->asr, 1.0);
    EXPECT_GE(r.find_row("logo", "curtain", "logo", "v=0.25")->fnr, 0.9);
    EXPECT_TRUE(check_trends(r).empty());
    EXPECT_EQ(r.corpus_fingerprint, corpus_fingerprint(corpus()));
    EXPECT_EQ(r.config_fingerprint.size(), 64u);
}

TEST(RunMatrix, BackgroundTargetDoesNotMoveLogoDetector) {
    const auto r = run_matrix(corpus(), enumerate_variants({.targets = {Target::background}}), detectors({"logo"}), {});
    ASSERT_EQ(r.rows.size(), 20u);
    for (const auto& row : r.rows) EXPECT_EQ(row.asr, 0.0) << row.variant_id;
}

// asr == fnr - baseline, recounted from the raw verdict records.
TEST(RunMatrix, RowsMatchRecountOverRawVerdicts) {
    const auto& r = logo_report();
    std::map<std::pair<std::string, std::string>, std::pair<int, int>> counts;  // (det, variant) -> (benign, total)
    for (const auto& v : r.verdicts) {
        auto& c = counts[{v.detector, v.variant_id}];
        c.first += v.verdict.label == Label::benign;
        ++c.second;
    }
    for (const auto& b : r.baseline) {
        const auto c = counts.at({b.detector, "none"});
        EXPECT_EQ(b.fnr, static_cast<double>(c.first) / c.second);
    }
    for (const auto& row : r.rows) {
        const auto c = counts.at({row.detector, row.variant_id});
        const auto base = counts.at({row.detector, "none"});
        EXPECT_EQ(c.second, row.n_pages);
        const double fnr = static_cast<double>(c.first) / c.second;
        EXPECT_NEAR(row.fnr, fnr, 1e-12);
        EXPECT_NEAR(row.asr, fnr - static_cast<double>(base.first) / base.second, 1e-9);
    }
}

TEST(RunMatrix, ParallelismDoesNotChangeReport) {
    const auto vs = enumerate_variants({.targets = {Target::both}});
    const auto dets = detectors({"logo", "logo-naive"});
    const auto one = run_matrix(corpus(), vs, dets, {.jobs = 1});
    const auto three = run_matrix(corpus(), vs, dets, {.jobs = 3});
    EXPECT_EQ(emit_report(one), emit_report(three));
    ASSERT_EQ(one.verdicts.size(), three.verdicts.size());
    for (std::size_t i = 0; i < one.verdicts.size(); ++i)
        EXPECT_EQ(format_verdict_record(one.verdicts[i]), format_verdict_record(three.verdicts[i]));
}

TEST(RunMatrix, ErrorsCarryPageAndVariant) {
    Corpus broken = corpus();
    broken.assets.erase("pic_dhl");
    try {
        run_matrix(broken, {}, detectors({"logo"}), {});
        FAIL();
    } catch (const EvalError& e) {
        EXPECT_NE(std::string(e.what()).find("_dhl"), std::string::npos) << e.what();
    } catch (const RenderError& e) {
        // underlays are computed before the matrix proper
        EXPECT_NE(std::string(e.what()).find("_dhl"), std::string::npos) << e.what();
    }
    EXPECT_THROW(run_matrix(corpus(), {}, {}, {}), std::invalid_argument);
}

TEST(StaticMode, TrendsOnShippedCorpus) {
    const auto r = run_static_mode(corpus(), default_static_effects(), detectors({"logo"}), {});
    EXPECT_EQ(r.mode, "static");
    ASSERT_EQ(r.rows.size(), 9u);
    EXPECT_EQ(r.find_row("logo", "pixelation", "page", "N=1")->asr, 0.0);
    EXPECT_GT(r.find_row("logo", "pixelation", "page", "N=5")->asr, r.find_row("logo", "pixelation", "page", "N=2")->asr);
    EXPECT_GE(r.find_row("logo", "curtain", "page", "v=0.2")->asr, r.find_row("logo", "curtain", "page", "v=0.8")->asr);
    EXPECT_TRUE(check_trends(r).empty());
}

TEST(ExtendedMode, DeltasMatchRecount) {
    const auto dets = detectors({"logo", "fullpage"});
    const auto r = run_extended_mode(corpus(), logo_variants(), dets, {});
    EXPECT_EQ(r.mode, "extended");
    const auto subset = evading_subset(corpus(), dets[0], CaptureConfig{});
    ASSERT_FALSE(subset.empty());
    EXPECT_EQ(r.find_baseline("logo")->fnr, 1.0);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.n_pages, static_cast<int>(subset.size()));
        const double base = r.find_baseline(row.detector)->fnr;
        EXPECT_GE(row.asr, -base - 1e-12);
        EXPECT_LE(row.asr, 1.0 - base + 1e-12);
        if (row.detector == "logo") {
            EXPECT_EQ(row.asr, 0.0) << row.variant_id;
        }
        int benign = 0, total = 0;
        for (const auto& v : r.verdicts)
            if (v.detector == row.detector && v.variant_id == row.variant_id) {
                benign += v.verdict.label == Label::benign;
                ++total;
            }
        EXPECT_NEAR(row.asr, static_cast<double>(benign) / total - base, 1e-9);
    }
    EXPECT_THROW(run_extended_mode(corpus(), logo_variants(), detectors({"fullpage"}), {}), std::invalid_argument);
}

TEST(CheckTrends, CatchesInjectedViolations) {
    EvalReport r = logo_report();
    for (auto& row : r.rows)
        if (row.detector == "logo" && row.attack_kind == "pixelation" && row.intensity == "N=5") row.asr = -0.5;
    EXPECT_FALSE(check_trends(r).empty());

    EvalReport bg = logo_report();
    bg.rows.push_back({"logo", "curtain", "background", "v=0", "curtain-background-v=0-T16000", 24, 0.1, 0.1});
    const auto msgs = check_trends(bg);
    ASSERT_EQ(msgs.size(), 1u);
    EXPECT_NE(msgs[0].find("background"), std::string::npos);
    EXPECT_FALSE(check_trends(bg, "nobody").empty());
}

TEST(Report, CsvLayout) {
    const std::string text = emit_report(sample_report());
    EXPECT_NE(text.find("[baseline]\ndetector,n_pages,fnr\nlogo,24,0.0000\nfullpage,24,0.0417\n"), std::string::npos);
    EXPECT_NE(text.find("[rows]\ndetector,attack_kind,target,intensity,n_pages,fnr,asr,variant_id\n"), std::string::npos);
    EXPECT_NE(text.find("fullpage,pixelation,both,N=5,24,0.0000,-0.0417,"), std::string::npos);
    EXPECT_NE(text.find("logo,combined,background,N=5&v=0.25,24,0.2917,0.2917,"), std::string::npos);
}

TEST(Report, EmptyRowsHaveHeaderAndBaseline) {
    EvalReport r = sample_report();
    r.rows.clear();
    const std::string text = emit_report(r);
    EXPECT_TRUE(text.ends_with("[rows]\ndetector,attack_kind,target,intensity,n_pages,fnr,asr,variant_id\n")) << text;
    EXPECT_NE(text.find("logo,24,0.0000"), std::string::npos);
}

TEST(Report, RoundTripBothFormats) {
    for (auto fmt : {ReportFormat::csv, ReportFormat::json}) {
        for (const EvalReport& r : {sample_report(), logo_report()}) {
            const EvalReport back = parse_report(emit_report(r, fmt), fmt);
            EXPECT_EQ(back.mode, r.mode);
            EXPECT_EQ(back.corpus_fingerprint, r.corpus_fingerprint);
            EXPECT_EQ(back.config_fingerprint, r.config_fingerprint);
            ASSERT_EQ(back.baseline.size(), r.baseline.size());
            for (std::size_t i = 0; i < r.baseline.size(); ++i) {
                EXPECT_EQ(back.baseline[i].detector, r.baseline[i].detector);
                EXPECT_EQ(back.baseline[i].n_pages, r.baseline[i].n_pages);
                EXPECT_NEAR(back.baseline[i].fnr, r.baseline[i].fnr, 5e-5);
            }
            ASSERT_EQ(back.rows.size(), r.rows.size());
            for (std::size_t i = 0; i < r.rows.size(); ++i) {
                const auto& a = back.rows[i];
                const auto& b = r.rows[i];
                EXPECT_EQ(std::tie(a.detector, a.attack_kind, a.target, a.intensity, a.variant_id, a.n_pages),
                          std::tie(b.detector, b.attack_kind, b.target, b.intensity, b.variant_id, b.n_pages));
                EXPECT_NEAR(a.fnr, b.fnr, 5e-5);
                EXPECT_NEAR(a.asr, b.asr, 5e-5);
            }
            EXPECT_EQ(emit_report(back, fmt), emit_report(r, fmt));
        }
    }
}

TEST(Report, FormatsAndParseErrors) {
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
    EXPECT_EQ(parse_report_format("structured-text"), ReportFormat::json);
    EXPECT_FALSE(parse_report_format("xml").has_value());
    EXPECT_EQ(format_fixed4(-0.00001), "0.0000");
    EXPECT_THROW(parse_report("[baseline]\nh\nlogo,x,0.1\n"), ReportParseError);
    EXPECT_THROW(parse_report("[rows]\nh\nlogo,curtain\n"), ReportParseError);
    EXPECT_THROW(parse_report("stray,data\n"), ReportParseError);
    EXPECT_THROW(parse_report("{", ReportFormat::json), ReportParseError);
}

TEST(Report, VerdictRecordFormat) {
    VerdictRecord v{"p01_outlook", "none", "logo", {Label::phishing, "outlook", 1.0}};
    EXPECT_EQ(format_verdict_record(v), "p01_outlook,none,logo,phishing,outlook,1.000000");
    v.verdict = {};
    EXPECT_EQ(format_verdict_record(v), "p01_outlook,none,logo,benign,,0.000000");
}
