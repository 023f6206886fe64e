#pragma once

// Evaluation harness: (pages x variants x detectors) matrix, FNR/ASR
// aggregation, static screenshot mode, extended mode and report I/O.

#include "phishlab/attack.hpp"
#include "phishlab/corpus.hpp"
#include "phishlab/detector.hpp"
#include "phishlab/render.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace phishlab {

enum class DetectorKind { logo_based, full_page };

struct DetectorSpec {
    std::string name;
    DetectorKind kind = DetectorKind::logo_based;
    DetectorConfig cfg;
};

/// The four configurations the matrix runs by default. "logo-lowgate"
/// localizes logos from a smaller visible fraction.
inline std::vector<DetectorSpec> default_detectors(const DetectorConfig& base, double fullpage_threshold) {
    DetectorSpec logo{"logo", DetectorKind::logo_based, base};
    logo.cfg.localization = Localization::oracle;
    DetectorSpec naive = logo;
    naive.name = "logo-naive";
    naive.cfg.localization = Localization::naive;
    DetectorSpec lowgate = logo;
    lowgate.name = "logo-lowgate";
    lowgate.cfg.detectability_min_fraction = 0.01;
    DetectorSpec full{"fullpage", DetectorKind::full_page, base};
    full.cfg.fullpage_threshold = fullpage_threshold;
    return {logo, naive, lowgate, full};
}

inline std::vector<DetectorSpec> select_detectors(const std::vector<DetectorSpec>& all, const std::vector<std::string>& names) {
    if (names.empty()) return all;
    std::vector<DetectorSpec> out;
    for (const auto& n : names) {
        auto it = std::find_if(all.begin(), all.end(), [&](const DetectorSpec& d) { return d.name == n; });
        if (it == all.end()) throw std::invalid_argument("unknown detector: " + n);
        out.push_back(*it);
    }
    return out;
}

struct VerdictRecord {
    std::string page_id;
    std::string variant_id;
    std::string detector;
    Verdict verdict;
};

inline std::string format_verdict_record(const VerdictRecord& r) {
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", r.verdict.score);
    return r.page_id + "," + r.variant_id + "," + r.detector + "," + std::string(to_string(r.verdict.label)) + "," +
           r.verdict.matched_brand.value_or("") + "," + score;
}

inline double compute_fnr(std::span<const Verdict> verdicts) {
    if (verdicts.empty()) throw std::invalid_argument("compute_fnr: no verdicts");
    std::size_t benign = 0;
    for (const auto& v : verdicts) benign += v.label == Label::benign ? 1 : 0;
    return static_cast<double>(benign) / static_cast<double>(verdicts.size());
}

inline double compute_asr(double fnr_atk, double fnr_base) {
    auto ok = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!ok(fnr_atk) || !ok(fnr_base)) throw std::invalid_argument("compute_asr: FNR outside [0,1]");
    return fnr_atk - fnr_base;
}

struct EvalRow {
    std::string detector;
    std::string attack_kind;
    std::string target;
    std::string intensity;
    std::string variant_id;
    int n_pages = 0;
    double fnr = 0.0;
    double asr = 0.0;
};

struct BaselineRow {
    std::string detector;
    int n_pages = 0;
    double fnr = 0.0;
};

struct EvalReport {
    std::string mode = "live";
    std::vector<BaselineRow> baseline;
    std::vector<EvalRow> rows;
    std::string corpus_fingerprint;
    std::string config_fingerprint;
    std::vector<VerdictRecord> verdicts;  // raw, not serialized into the report

    const BaselineRow* find_baseline(std::string_view detector) const {
        for (const auto& b : baseline)
            if (b.detector == detector) return &b;
        return nullptr;
    }
    const EvalRow* find_row(std::string_view detector, std::string_view variant_id) const {
        for (const auto& r : rows)
            if (r.detector == detector && r.variant_id == variant_id) return &r;
        return nullptr;
    }
    const EvalRow* find_row(std::string_view detector, std::string_view kind, std::string_view target,
                            std::string_view intensity) const {
        for (const auto& r : rows)
            if (r.detector == detector && r.attack_kind == kind && r.target == target && r.intensity == intensity) return &r;
        return nullptr;
    }
    /// Rows whose FNR fell below the baseline.
    std::vector<EvalRow> decreases() const {
        std::vector<EvalRow> out;
        for (const auto& r : rows)
            if (r.asr < 0.0) out.push_back(r);
        return out;
    }
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalOptions {
    CaptureConfig capture;
    int jobs = 1;
};

namespace detail {

inline constexpr const char* kBaselineVariant = "none";

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results go to slots
// owned by the caller; the first failure by index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || n < 2) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Detectors {
    const std::vector<DetectorSpec>* specs;
    std::vector<std::optional<ReferenceIndex>> refs;
    std::vector<std::optional<TrustedIndex>> trusted;

    Detectors(const std::vector<DetectorSpec>& s, const Corpus& c) : specs(&s) {
        for (const auto& d : s) {
            if (d.kind == DetectorKind::logo_based) {
                refs.emplace_back(std::in_place, c.references, d.cfg);
                trusted.emplace_back();
            } else {
                refs.emplace_back();
                trusted.emplace_back(std::in_place, c.trusted, d.cfg);
            }
        }
    }

    Verdict run(std::size_t i, const Screenshot& shot, const PageSpec& page, const PageContext& ctx) const {
        const auto& d = (*specs)[i];
        if (d.kind == DetectorKind::logo_based) return detect_logo_based(shot, page.hosting_domain, &ctx, *refs[i], d.cfg);
        return detect_full_page(shot, page.hosting_domain, *trusted[i], d.cfg);
    }
};

struct Column {
    std::string variant_id;
    std::string attack_kind;
    std::string target;
    std::string intensity;
};

// verdicts[(page * columns + column) * detectors + detector]; column 0 is
// the unattacked baseline.
inline void aggregate(EvalReport& report, const std::vector<const PageSpec*>& pages, const std::vector<Column>& columns,
                      const std::vector<DetectorSpec>& detectors, const std::vector<Verdict>& verdicts) {
    const std::size_t nd = detectors.size();
    const std::size_t nc = columns.size();
    auto at = [&](std::size_t p, std::size_t c, std::size_t d) -> const Verdict& { return verdicts[(p * nc + c) * nd + d]; };
    std::vector<double> base(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        std::vector<Verdict> v;
        for (std::size_t p = 0; p < pages.size(); ++p) v.push_back(at(p, 0, d));
        base[d] = compute_fnr(v);
        report.baseline.push_back({detectors[d].name, static_cast<int>(pages.size()), base[d]});
    }
    for (std::size_t c = 1; c < nc; ++c) {
        for (std::size_t d = 0; d < nd; ++d) {
            std::vector<Verdict> v;
            for (std::size_t p = 0; p < pages.size(); ++p) v.push_back(at(p, c, d));
            const double fnr = compute_fnr(v);
            report.rows.push_back({detectors[d].name, columns[c].attack_kind, columns[c].target, columns[c].intensity,
                                   columns[c].variant_id, static_cast<int>(pages.size()), fnr, compute_asr(fnr, base[d])});
        }
    }
    for (std::size_t p = 0; p < pages.size(); ++p)
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t d = 0; d < nd; ++d)
                report.verdicts.push_back({pages[p]->page_id, columns[c].variant_id, detectors[d].name, at(p, c, d)});
}

inline std::string detector_fingerprint_text(const std::vector<DetectorSpec>& detectors) {
    std::ostringstream s;
    s.precision(17);
    for (const auto& d : detectors)
        s << d.name << ':' << (d.kind == DetectorKind::logo_based ? "logo" : "full") << ':' << d.cfg.theta << ':'
          << d.cfg.hash_grid << ':' << d.cfg.detectability_min_fraction << ':' << d.cfg.fullpage_threshold << ':'
          << (d.cfg.localization == Localization::oracle ? "oracle" : "naive") << ':' << d.cfg.naive_min_area << ';';
    return s.str();
}

inline std::string capture_fingerprint_text(const CaptureConfig& c) {
    return std::to_string(c.capture_time_ms) + "/" + std::to_string(c.count) + "/" + std::to_string(c.interval_ms) + "/" +
           std::to_string(c.initial_delay_ms);
}

}  // namespace detail

inline std::string config_fingerprint(std::string_view mode, const std::vector<DetectorSpec>& detectors,
                                      const CaptureConfig& capture, std::string_view workload) {
    Sha256 h;
    h.update(mode);
    h.update(detail::detector_fingerprint_text(detectors));
    h.update(detail::capture_fingerprint_text(capture));
    h.update(workload);
    return h.hex();
}

/// Captures every page under every variant at `opts.capture.capture_time_ms`
/// plus an unattacked baseline capture, and scores each detector.
inline EvalReport run_matrix(const Corpus& corpus, const std::vector<const PageSpec*>& pages,
                             const std::vector<Variant>& variants, const std::vector<DetectorSpec>& detectors,
                             const EvalOptions& opts, std::string mode = "live") {
    if (detectors.empty()) throw std::invalid_argument("run_matrix: at least one detector required");
    if (pages.empty()) throw std::invalid_argument("run_matrix: no pages");
    std::vector<detail::Column> columns{{detail::kBaselineVariant, "none", "-", "-"}};
    std::vector<const AttackScript*> scripts{nullptr};
    const AttackScript none = no_attack();
    for (const auto& v : variants) {
        if (auto err = check_script(v.script); !err.empty()) throw std::invalid_argument("variant " + v.id + ": " + err);
        columns.push_back({v.id, std::string(to_string(v.script.attack_kind)), std::string(to_string(v.script.target)),
                           v.intensity});
        scripts.push_back(&v.script);
    }
    const detail::Detectors dets(detectors, corpus);
    std::vector<PageContext> contexts(pages.size());
    detail::parallel_for(pages.size(), opts.jobs, [&](std::size_t p) { contexts[p] = PageContext(*pages[p], corpus.assets); });

    const std::size_t nc = columns.size();
    const std::size_t nd = detectors.size();
    std::vector<Verdict> verdicts(pages.size() * nc * nd);
    detail::parallel_for(pages.size() * nc, opts.jobs, [&](std::size_t task) {
        const std::size_t p = task / nc;
        const std::size_t c = task % nc;
        const PageSpec& page = *pages[p];
        try {
            const Screenshot shot = capture(page, corpus.assets, scripts[c] ? *scripts[c] : none, opts.capture, columns[c].variant_id);
            for (std::size_t d = 0; d < nd; ++d) verdicts[task * nd + d] = dets.run(d, shot, page, contexts[p]);
        } catch (const std::exception& e) {
            throw EvalError(page.page_id + " / " + columns[c].variant_id + ": " + e.what());
        }
    });

    EvalReport report;
    report.mode = std::move(mode);
    detail::aggregate(report, pages, columns, detectors, verdicts);
    report.corpus_fingerprint = corpus_fingerprint(corpus);
    std::string pages_text;
    for (const auto* p : pages) pages_text += p->page_id + ";";
    report.config_fingerprint =
        config_fingerprint(report.mode, detectors, opts.capture, pages_text + variants_to_manifest(variants));
    return report;
}

inline std::vector<const PageSpec*> page_pointers(const std::vector<PageSpec>& pages) {
    std::vector<const PageSpec*> out;
    for (const auto& p : pages) out.push_back(&p);
    return out;
}

inline EvalReport run_matrix(const Corpus& corpus, const std::vector<Variant>& variants,
                             const std::vector<DetectorSpec>& detectors, const EvalOptions& opts) {
    return run_matrix(corpus, page_pointers(corpus.pages), variants, detectors, opts);
}

struct StaticEffect {
    AttackKind kind;
    EffectState state;
    std::string label;
};

/// Whole-screenshot effects: pixelation N=1..5, then curtain v=0.2..0.8.
inline std::vector<StaticEffect> default_static_effects() {
    std::vector<StaticEffect> out;
    for (int n = 1; n <= 5; ++n) out.push_back({AttackKind::pixelation, {1.0, n}, pixel_label(n)});
    for (double v : {0.2, 0.4, 0.6, 0.8}) out.push_back({AttackKind::curtain, {v, 1}, curtain_label(v)});
    return out;
}

/// Perturbs unattacked captures of every corpus page at the screenshot
/// level, then aggregates as run_matrix does. Rows use target "page".
inline EvalReport run_static_mode(const Corpus& corpus, const std::vector<StaticEffect>& effects,
                                  const std::vector<DetectorSpec>& detectors, const EvalOptions& opts) {
    if (detectors.empty()) throw std::invalid_argument("run_static_mode: at least one detector required");
    const auto pages = page_pointers(corpus.pages);
    if (pages.empty()) throw std::invalid_argument("run_static_mode: no pages");
    std::vector<detail::Column> columns{{detail::kBaselineVariant, "none", "-", "-"}};
    for (const auto& e : effects) {
        if (!e.state.valid()) throw std::invalid_argument("static effect out of range: " + e.label);
        columns.push_back({"static:" + e.label, std::string(to_string(e.kind)), "page", e.label});
    }
    const detail::Detectors dets(detectors, corpus);
    std::vector<PageContext> contexts(pages.size());
    std::vector<Screenshot> shots(pages.size());
    detail::parallel_for(pages.size(), opts.jobs, [&](std::size_t p) {
        contexts[p] = PageContext(*pages[p], corpus.assets);
        shots[p] = capture(*pages[p], corpus.assets, no_attack(), opts.capture);
    });

    const std::size_t nc = columns.size();
    const std::size_t nd = detectors.size();
    std::vector<Verdict> verdicts(pages.size() * nc * nd);
    detail::parallel_for(pages.size() * nc, opts.jobs, [&](std::size_t task) {
        const std::size_t p = task / nc;
        const std::size_t c = task % nc;
        try {
            const Screenshot shot = c == 0 ? shots[p] : static_perturb(shots[p], effects[c - 1].state);
            for (std::size_t d = 0; d < nd; ++d) verdicts[task * nd + d] = dets.run(d, shot, *pages[p], contexts[p]);
        } catch (const std::exception& e) {
            throw EvalError(pages[p]->page_id + " / " + columns[c].variant_id + ": " + e.what());
        }
    });

    EvalReport report;
    report.mode = "static";
    detail::aggregate(report, pages, columns, detectors, verdicts);
    report.corpus_fingerprint = corpus_fingerprint(corpus);
    std::string workload;
    for (const auto& c : columns) workload += c.variant_id + ";";
    report.config_fingerprint = config_fingerprint(report.mode, detectors, opts.capture, workload);
    return report;
}

/// Extended pages whose unattacked capture `reference` already labels
/// benign.
inline std::vector<const PageSpec*> evading_subset(const Corpus& corpus, const DetectorSpec& reference,
                                                   const CaptureConfig& capture_cfg) {
    const std::vector<DetectorSpec> one{reference};
    const detail::Detectors dets(one, corpus);
    std::vector<const PageSpec*> out;
    for (const auto& page : corpus.extended_pages) {
        const PageContext ctx(page, corpus.assets);
        const Screenshot shot = capture(page, corpus.assets, no_attack(), capture_cfg);
        if (dets.run(0, shot, page, ctx).label == Label::benign) out.push_back(&page);
    }
    return out;
}

/// Matrix over the already-evading pages. Row asr is the FNR change against
/// the baseline; decreases() lists the flagged variants.
inline EvalReport run_extended_mode(const Corpus& corpus, const std::vector<Variant>& variants,
                                    const std::vector<DetectorSpec>& detectors, const EvalOptions& opts,
                                    const std::string& reference_detector = "logo") {
    auto ref = std::find_if(detectors.begin(), detectors.end(),
                            [&](const DetectorSpec& d) { return d.name == reference_detector; });
    if (ref == detectors.end()) throw std::invalid_argument("extended mode: reference detector not selected: " + reference_detector);
    const auto subset = evading_subset(corpus, *ref, opts.capture);
    if (subset.empty()) throw EvalError("extended mode: no page evades the reference detector");
    return run_matrix(corpus, subset, variants, detectors, opts, "extended");
}

// ------------------------------------------------------------------ trends

/// Monotonicity checks on `detector`. Returns one message per violation.
inline std::vector<std::string> check_trends(const EvalReport& r, const std::string& detector = "logo") {
    std::vector<std::string> out;
    const auto* base = r.find_baseline(detector);
    if (!base) return {"no baseline for detector " + detector};
    auto asr_of = [&](std::string_view kind, std::string_view target, const std::string& label) -> std::optional<double> {
        if (const auto* row = r.find_row(detector, kind, target, label)) return row->asr;
        return std::nullopt;
    };
    auto chain = [&](const char* what, std::vector<std::pair<std::string, std::optional<double>>> seq, bool increasing) {
        std::optional<std::pair<std::string, double>> prev;
        for (const auto& [label, asr] : seq) {
            if (!asr) continue;
            if (prev && (increasing ? *asr < prev->second - 1e-12 : *asr > prev->second + 1e-12))
                out.push_back(std::string(what) + ": ASR at " + label + " breaks the trend after " + prev->first);
            prev = {label, *asr};
        }
    };
    if (r.mode == "static") {
        std::vector<std::pair<std::string, std::optional<double>>> pix;
        for (int n = 1; n <= 5; ++n) pix.emplace_back(pixel_label(n), n == 1 ? 0.0 : asr_of("pixelation", "page", pixel_label(n)));
        if (auto n1 = asr_of("pixelation", "page", pixel_label(1)); n1 && *n1 != 0.0) out.push_back("static N=1 ASR is not 0");
        chain("static pixelation", pix, true);
        std::vector<std::pair<std::string, std::optional<double>>> cur;
        for (double v : {0.2, 0.4, 0.6, 0.8}) cur.emplace_back(curtain_label(v), asr_of("curtain", "page", curtain_label(v)));
        chain("static curtain", cur, false);
        return out;
    }
    std::vector<std::pair<std::string, std::optional<double>>> cur;
    for (double v : {0.0, 0.25, 0.5, 0.75}) cur.emplace_back(curtain_label(v), asr_of("curtain", "logo", curtain_label(v)));
    cur.emplace_back(curtain_label(1.0), 0.0);
    chain("curtain on logo", cur, false);
    std::vector<std::pair<std::string, std::optional<double>>> pix{{pixel_label(1), 0.0}};
    for (int n = 2; n <= 5; ++n) pix.emplace_back(pixel_label(n), asr_of("pixelation", "logo", pixel_label(n)));
    chain("pixelation on logo", pix, true);
    if (r.mode == "live")
        for (const auto& row : r.rows)
            if (row.detector == detector && row.target == "background" && row.asr != 0.0)
                out.push_back("background variant " + row.variant_id + " changed the logo detector (ASR " +
                              std::to_string(row.asr) + ")");
    return out;
}

// ------------------------------------------------------------------ report I/O

enum class ReportFormat { csv, json };

inline std::optional<ReportFormat> parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json" || s == "structured-text") return ReportFormat::json;
    return std::nullopt;
}

inline std::string format_fixed4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

inline std::string emit_report(const EvalReport& r, ReportFormat fmt = ReportFormat::csv) {
    if (fmt == ReportFormat::json) {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["mode"] = r.mode;
        j["corpus_fingerprint"] = r.corpus_fingerprint;
        j["config_fingerprint"] = r.config_fingerprint;
        auto base = nlohmann::ordered_json::array();
        for (const auto& b : r.baseline)
            base.push_back({{"detector", b.detector}, {"n_pages", b.n_pages}, {"fnr", format_fixed4(b.fnr)}});
        j["baseline"] = std::move(base);
        auto rows = nlohmann::ordered_json::array();
        for (const auto& x : r.rows)
            rows.push_back({{"detector", x.detector}, {"attack_kind", x.attack_kind}, {"target", x.target},
                            {"intensity", x.intensity}, {"n_pages", x.n_pages}, {"fnr", format_fixed4(x.fnr)},
                            {"asr", format_fixed4(x.asr)}, {"variant_id", x.variant_id}});
        j["rows"] = std::move(rows);
        if (r.mode == "extended") {
            auto flags = nlohmann::ordered_json::array();
            for (const auto& x : r.decreases()) flags.push_back({{"detector", x.detector}, {"variant_id", x.variant_id}});
            j["flags"] = std::move(flags);
        }
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# mode=" << r.mode << "\n# corpus=" << r.corpus_fingerprint << "\n# config=" << r.config_fingerprint << "\n";
    out << "[baseline]\ndetector,n_pages,fnr\n";
    for (const auto& b : r.baseline) out << b.detector << ',' << b.n_pages << ',' << format_fixed4(b.fnr) << '\n';
    out << "[rows]\ndetector,attack_kind,target,intensity,n_pages,fnr,asr,variant_id\n";
    for (const auto& x : r.rows)
        out << x.detector << ',' << x.attack_kind << ',' << x.target << ',' << x.intensity << ',' << x.n_pages << ','
            << format_fixed4(x.fnr) << ',' << format_fixed4(x.asr) << ',' << x.variant_id << '\n';
    if (r.mode == "extended") {
        out << "[flags]\ndetector,variant_id,fnr_change\n";
        for (const auto& x : r.decreases()) out << x.detector << ',' << x.variant_id << ',' << format_fixed4(x.asr) << '\n';
    }
    return out.str();
}

class ReportParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_number(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number: " + s);
    return v;
}

inline int parse_int(const std::string& s) {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad integer: " + s);
    return v;
}

}  // namespace detail

/// Inverse of emit_report. Numbers come back at 4-decimal precision.
inline EvalReport parse_report(const std::string& text, ReportFormat fmt = ReportFormat::csv) {
    EvalReport r;
    if (fmt == ReportFormat::json) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ReportParseError(e.what());
        }
        r.mode = j.at("mode").get<std::string>();
        r.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        for (const auto& b : j.at("baseline"))
            r.baseline.push_back({b.at("detector").get<std::string>(), b.at("n_pages").get<int>(),
                                  detail::parse_number(b.at("fnr").get<std::string>())});
        for (const auto& x : j.at("rows"))
            r.rows.push_back({x.at("detector").get<std::string>(), x.at("attack_kind").get<std::string>(),
                              x.at("target").get<std::string>(), x.at("intensity").get<std::string>(),
                              x.at("variant_id").get<std::string>(), x.at("n_pages").get<int>(),
                              detail::parse_number(x.at("fnr").get<std::string>()),
                              detail::parse_number(x.at("asr").get<std::string>())});
        return r;
    }
    std::istringstream in(text);
    std::string line;
    std::string section;
    bool header_pending = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fail = [&](const std::string& why) {
            throw ReportParseError("report line " + std::to_string(line_no) + ": " + why);
        };
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = line.substr(2, eq - 2);
            const auto value = line.substr(eq + 1);
            if (key == "mode") r.mode = value;
            else if (key == "corpus") r.corpus_fingerprint = value;
            else if (key == "config") r.config_fingerprint = value;
            continue;
        }
        if (line.front() == '[') {
            section = line;
            header_pending = true;
            continue;
        }
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto f = detail::split_csv(line);
        try {
            if (section == "[baseline]") {
                if (f.size() != 3) fail("expected 3 baseline fields");
                r.baseline.push_back({f[0], detail::parse_int(f[1]), detail::parse_number(f[2])});
            } else if (section == "[rows]") {
                if (f.size() != 8) fail("expected 8 row fields");
                r.rows.push_back({f[0], f[1], f[2], f[3], f[7], detail::parse_int(f[4]), detail::parse_number(f[5]),
                                  detail::parse_number(f[6])});
            } else if (section != "[flags]") {
                fail("data outside a known section");
            }
        } catch (const ReportParseError&) {
            throw;
        } catch (const std::logic_error& e) {
            fail(e.what());
        }
    }
    return r;
}

}  // namespace phishlab
