#include "abd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "abd/construct.hpp"
#include "abd/oc.hpp"
#include "abd/panel.hpp"
#include "abd/csv.hpp"
#include "abd/errors.hpp"
#include "abd/proxy.hpp"
#include "abd/report.hpp"

namespace abd {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << content;
}

std::string round4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "config file (JSON)");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override config seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--workers", opts.workers, "override config worker count");
}

DesignConfig load_effective(const CommonOpts& opts) {
    DesignConfig cfg = load_config_file(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.workers >= 0) cfg.workers = opts.workers;
    cfg.validate();
    return cfg;
}

void print_recommendation(const DesignRecommendation& rec) {
    std::cout << "recommended n_A = " << rec.n_a << " (n_B = " << rec.n_b
              << ", total = " << rec.n_total << ")\n";
    std::cout << "gamma =";
    for (double g : rec.gamma.gamma) std::cout << ' ' << round4(g);
    std::cout << "\nfdr_hat = " << round4(rec.estimates.fdr_hat) << " (mcse "
              << round4(rec.estimates.fdr_mcse) << "), power_hat = "
              << round4(rec.estimates.power_hat) << " (mcse "
              << round4(rec.estimates.power_mcse) << ")\n";
}

int cmd_design(const CommonOpts& opts, const std::string& scheme, double box) {
    DesignConfig cfg = load_effective(opts);
    if (!scheme.empty()) cfg.scheme = scheme;
    if (box >= 0.0) cfg.box = box;
    cfg.validate();
    const Report report = design_workflow(cfg);
    write_file(fs::path(opts.out_dir) / "report.json", report_to_json(report));
    write_file(fs::path(opts.out_dir) / "trace.csv",
               trace_to_csv(report.recommendation->trace, cfg.metric_panel().k()));
    print_recommendation(*report.recommendation);
    return 0;
}

int cmd_verify(const CommonOpts& opts, long n_total, const std::vector<double>& gamma,
               int reps, bool export_panel, bool export_scan) {
    DesignConfig cfg = load_effective(opts);
    const int effective_reps = reps > 0 ? reps : cfg.reps_per_submodel;
    ProbPanel sim_panel;
    const bool need_panel = export_panel || export_scan;
    const VerificationBlock block = verify_design(cfg, n_total, gamma, effective_reps,
                                                  need_panel ? &sim_panel : nullptr);
    if (export_panel)
        write_file(fs::path(opts.out_dir) / "panel.csv", panel_to_csv(sim_panel));
    if (export_scan)
        write_file(fs::path(opts.out_dir) / "scan.csv",
                   scan_to_csv(common_threshold_scan(sim_panel)));
    Report report;
    report.version = "0.1.0";
    report.config_hash = config_hash(cfg);
    report.config_canonical = serialize_config(cfg, false);
    report.verification = block;
    write_file(fs::path(opts.out_dir) / "verify.json", report_to_json(report));
    std::cout << "verified n_total = " << n_total
              << ": fdr_hat = " << round4(block.estimates.fdr_hat) << " (mcse "
              << round4(block.estimates.fdr_mcse)
              << "), power_hat = " << round4(block.estimates.power_hat) << " (mcse "
              << round4(block.estimates.power_mcse) << ")\n";
    return 0;
}

int cmd_construct(const CommonOpts& opts) {
    const DesignConfig cfg = load_effective(opts);
    const PsiMixture psi = cfg.build_psi();
    write_file(fs::path(opts.out_dir) / "submodels.csv", serialize_mixture(psi));
    std::cout << "wrote " << psi.size() << " submodels\n";
    return 0;
}

int cmd_proxy_check(const CommonOpts& opts, double n_ref) {
    const DesignConfig cfg = load_effective(opts);
    const PsiMixture psi = cfg.build_psi();
    const auto rows = slope_check(psi, cfg.metric_panel(), cfg.c, n_ref, cfg.family());
    write_file(fs::path(opts.out_dir) / "slope_check.csv", slope_check_to_csv(rows));
    double worst = 0.0;
    for (const auto& r : rows)
        if (r.theory != 0.0) worst = std::max(worst, r.rel_err);
    std::cout << "slope check rows: " << rows.size() << ", worst rel err (nonzero slopes): "
              << round4(worst) << "\n";
    return 0;
}

int cmd_baseline(const CommonOpts& opts, double alpha) {
    DesignConfig cfg = load_effective(opts);
    const double alpha_eff = alpha > 0.0 ? alpha : cfg.alpha_total;
    const BaselineResult result = baseline_bonferroni(cfg, alpha_eff);
    std::ostringstream out;
    out << "{\"gamma_eff\":" << fmt17(result.gamma_eff) << ",\"n_a\":" << result.n_a
        << ",\"n_b\":" << result.n_b << ",\"n_total\":" << result.n_total
        << ",\"power_hat\":" << fmt17(result.estimates.power_hat)
        << ",\"power_mcse\":" << fmt17(result.estimates.power_mcse) << "}";
    write_file(fs::path(opts.out_dir) / "baseline.json", out.str());
    write_file(fs::path(opts.out_dir) / "baseline_trace.csv",
               trace_to_csv(result.trace, cfg.metric_panel().k()));
    std::cout << "baseline n_A = " << result.n_a << " at gamma = " << round4(result.gamma_eff)
              << ", power_hat = " << round4(result.estimates.power_hat) << "\n";
    return 0;
}

int cmd_table1(const CommonOpts& opts) {
    const DesignConfig cfg = load_effective(opts);
    const auto rows = emit_table1(cfg);
    write_file(fs::path(opts.out_dir) / "table1.csv",
               table_to_csv(rows, cfg.metric_panel().k()));
    for (const auto& row : rows) {
        std::cout << row.label << ": n_A = " << row.rec.n_a << ", gamma =";
        for (double g : row.rec.gamma.gamma) std::cout << ' ' << round4(g);
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"FDR-bounded Bayesian A/B test design"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string scheme;
    double box = -1.0;
    long n_total = 0;
    std::vector<double> gamma;
    int reps = 0;
    bool export_panel = false;
    bool export_scan = false;
    double n_ref = 2e5;
    double alpha = 0.0;

    auto* design = app.add_subcommand("design", "recommend (n, gamma) for a config");
    add_common(design, opts);
    design->add_option("--scheme", scheme, "common|boxed (overrides config)");
    design->add_option("--box", box, "box width for the boxed scheme");

    auto* verify = app.add_subcommand("verify", "re-simulate a fixed (n, gamma) design");
    add_common(verify, opts);
    verify->add_option("--n", n_total, "total sample size across groups")->required();
    verify->add_option("--gamma", gamma, "threshold(s); one value is broadcast")->required();
    verify->add_option("--reps", reps, "repetitions per submodel");
    verify->add_flag("--export-panel", export_panel,
                     "write the simulated probability panel as panel.csv");
    verify->add_flag("--export-scan", export_scan,
                     "write the common-threshold scan trace as scan.csv");

    auto* construct = app.add_subcommand("construct-models", "emit the scenario mixture");
    add_common(construct, opts);

    auto* proxy = app.add_subcommand("proxy-check", "limiting-slope comparison table");
    add_common(proxy, opts);
    proxy->add_option("--n-ref", n_ref, "total n at which slopes are compared");

    auto* baseline = app.add_subcommand("baseline", "family-wise comparison design");
    add_common(baseline, opts);
    baseline->add_option("--alpha", alpha, "total significance budget");

    auto* table1 = app.add_subcommand("emit-table1", "six-design summary ladder");
    add_common(table1, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (design->parsed()) return cmd_design(opts, scheme, box);
        if (verify->parsed())
            return cmd_verify(opts, n_total, gamma, reps, export_panel, export_scan);
        if (construct->parsed()) return cmd_construct(opts);
        if (proxy->parsed()) return cmd_proxy_check(opts, n_ref);
        if (baseline->parsed()) return cmd_baseline(opts, alpha);
        if (table1->parsed()) return cmd_table1(opts);
    } catch (const RangeExhaustedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConstructionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace abd
