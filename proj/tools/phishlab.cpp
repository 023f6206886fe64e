#include "phishlab/attack.hpp"
#include "phishlab/corpus.hpp"
#include "phishlab/eval.hpp"
#include "phishlab/guard_server.hpp"
#include "phishlab/png_io.hpp"
#include "phishlab/render.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace phishlab;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<Variant> load_variants(const std::string& manifest, int capture_ms) {
    if (manifest.empty()) return enumerate_variants({.capture_time_ms = capture_ms});
    return variants_from_manifest(slurp(manifest));
}

Corpus load_checked(const std::string& dir) {
    Corpus c = load_corpus(dir);
    if (auto diags = validate_corpus(c); !diags.empty()) {
        for (const auto& d : diags) std::cerr << "corpus: " << d.str() << "\n";
        throw std::runtime_error("corpus failed validation");
    }
    return c;
}

int cmd_corpus_synth(std::uint64_t seed, const std::string& out) {
    Corpus c = synth_corpus(seed);
    if (auto diags = validate_corpus(c); !diags.empty()) {
        for (const auto& d : diags) std::cerr << "corpus: " << d.str() << "\n";
        return 1;
    }
    save_corpus(c, out);
    std::cout << "wrote " << c.pages.size() << " phishing, " << c.benign_pages.size() << " benign, "
              << c.extended_pages.size() << " extended pages to " << out << "\n";
    return 0;
}

int cmd_render(const std::string& corpus_dir, const std::string& page_id, const std::string& variant,
               const std::string& manifest, int capture_ms, int t_ms, const std::string& out) {
    const Corpus c = load_checked(corpus_dir);
    const PageSpec* page = c.find_page(page_id);
    if (!page) throw std::runtime_error("unknown page: " + page_id);
    AttackScript script = no_attack();
    if (variant != "none") {
        const auto variants = load_variants(manifest, capture_ms);
        auto it = std::find_if(variants.begin(), variants.end(), [&](const Variant& v) { return v.id == variant; });
        if (it == variants.end()) throw std::runtime_error("unknown variant: " + variant);
        script = it->script;
    }
    write_png(out, render_at(*page, c.assets, script, t_ms));
    return 0;
}

struct EvalArgs {
    std::string corpus;
    std::string variants;
    std::string detectors;
    std::string mode = "live";
    std::string format = "csv";
    std::string out;
    std::string verdicts_out;
    int capture_ms = 2000;
    double theta = 0.87;
    int jobs = 1;
    bool assert_trends = false;
};

int cmd_eval(const EvalArgs& a) {
    const Corpus c = load_checked(a.corpus);
    const auto fmt = parse_report_format(a.format);
    if (!fmt) throw std::runtime_error("unknown report format: " + a.format);
    DetectorConfig base;
    base.theta = a.theta;
    std::vector<std::string> names;
    for (std::stringstream ss(a.detectors); ss.good();) {
        std::string n;
        std::getline(ss, n, ',');
        if (!n.empty()) names.push_back(n);
    }
    const auto detectors = select_detectors(default_detectors(base, c.fullpage_threshold), names);
    EvalOptions opts;
    opts.capture.capture_time_ms = a.capture_ms;
    opts.jobs = a.jobs;

    EvalReport report;
    if (a.mode == "live") report = run_matrix(c, load_variants(a.variants, a.capture_ms), detectors, opts);
    else if (a.mode == "static") report = run_static_mode(c, default_static_effects(), detectors, opts);
    else if (a.mode == "extended") report = run_extended_mode(c, load_variants(a.variants, a.capture_ms), detectors, opts);
    else throw std::runtime_error("unknown mode: " + a.mode);

    write_out(a.out, emit_report(report, *fmt));
    if (!a.verdicts_out.empty()) {
        std::string lines = "page_id,variant_id,detector,label,brand,score\n";
        for (const auto& v : report.verdicts) lines += format_verdict_record(v) + "\n";
        write_out(a.verdicts_out, lines);
    }
    if (report.mode == "extended")
        for (const auto& r : report.decreases())
            std::cerr << "flag: " << r.detector << " FNR decreased under " << r.variant_id << "\n";
    if (a.assert_trends) {
        const auto violations = check_trends(report);
        for (const auto& v : violations) std::cerr << "trend violation: " << v << "\n";
        if (!violations.empty()) return 3;
    }
    return 0;
}

int cmd_serve(const std::string& config_path) {
    GuardConfig cfg = load_guard_config(config_path);
    apply_env_overrides(cfg);
    if (auto err = check_guard_config(cfg); !err.empty()) throw GuardConfigError(err);
    if (cfg.reference_corpus.empty()) throw GuardConfigError("guard config needs reference_corpus");
    Corpus c = load_corpus(cfg.reference_corpus);

    // Block termination signals before any thread starts so only sigwait
    // sees them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    GuardServer server(std::move(c.references), cfg);
    server.start();
    std::cout << "listening on " << cfg.bind_host << ":" << server.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "shutting down (" << (sig == SIGTERM ? "SIGTERM" : "SIGINT") << ")" << std::endl;
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delayed-rendering phishing evasion lab"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("corpus-synth", "Write a synthetic corpus");
    std::uint64_t seed = 0;
    std::string out;
    synth->add_option("--seed", seed, "Generator seed");
    synth->add_option("--out", out, "Output directory")->required();

    auto* render = app.add_subcommand("render", "Render one page at one instant");
    std::string corpus, page, variant = "none", manifest;
    int capture_ms = 2000;
    int t_ms = 2000;
    render->add_option("--corpus", corpus, "Corpus directory")->required();
    render->add_option("--page", page, "Page id")->required();
    render->add_option("--variant", variant, "Variant id, or none");
    render->add_option("--variants", manifest, "Variant manifest (default: standard enumeration)");
    render->add_option("--capture-time", capture_ms, "Capture time used by the standard enumeration");
    render->add_option("--t", t_ms, "Render instant in ms");
    render->add_option("--out", out, "Output PNG")->required();

    auto* variants = app.add_subcommand("variants", "Write the standard variant manifest");
    variants->add_option("--capture-time", capture_ms, "Capture time the variants are staged for");
    variants->add_option("--out", out, "Output path (default stdout)");

    auto* eval = app.add_subcommand("eval", "Run the evaluation matrix");
    EvalArgs ea;
    eval->add_option("--corpus", ea.corpus, "Corpus directory")->required();
    eval->add_option("--variants", ea.variants, "Variant manifest (default: standard enumeration)");
    eval->add_option("--detectors", ea.detectors, "Comma-separated detector names (default: all)");
    eval->add_option("--mode", ea.mode, "live, static or extended")->check(CLI::IsMember({"live", "static", "extended"}));
    eval->add_option("--format", ea.format, "csv or json")->check(CLI::IsMember({"csv", "json", "structured-text"}));
    eval->add_option("--capture-time", ea.capture_ms, "Capture time in ms");
    eval->add_option("--theta", ea.theta, "Logo similarity threshold")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--jobs", ea.jobs, "Worker threads")->check(CLI::PositiveNumber);
    eval->add_option("--out", ea.out, "Report path (default stdout)");
    eval->add_option("--verdicts", ea.verdicts_out, "Also write raw verdict records here");
    eval->add_flag("--assert-trends", ea.assert_trends, "Fail when a monotonicity check fails");

    auto* serve = app.add_subcommand("serve", "Run the defense service");
    std::string config;
    serve->add_option("--config", config, "Guard config JSON")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*synth) return cmd_corpus_synth(seed, out);
        if (*render) return cmd_render(corpus, page, variant, manifest, capture_ms, t_ms, out);
        if (*variants) {
            write_out(out, variants_to_manifest(enumerate_variants({.capture_time_ms = capture_ms})));
            return 0;
        }
        if (*eval) return cmd_eval(ea);
        if (*serve) return cmd_serve(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
