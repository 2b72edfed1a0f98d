#include "abd/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "abd/construct.hpp"
#include "abd/csv.hpp"
#include "abd/errors.hpp"

namespace abd {

using nlohmann::json;

void DesignConfig::validate() const {
    if (deltas.empty()) throw ValidationError("config: deltas must list at least one metric");
    for (const auto& h : deltas) h.validate();
    if (psi_type != "all30" && psi_type != "sizes" && psi_type != "explicit")
        throw ValidationError("config: psi_type must be all30, sizes, or explicit");
    if (psi_type == "sizes" && lambda_sizes.empty())
        throw ValidationError("config: lambda_sizes required for psi_type=sizes");
    if (psi_type == "explicit" && mixture_file.empty())
        throw ValidationError("config: mixture_file required for psi_type=explicit");
    for (double m : marginals_a)
        if (!(m >= 0.0 && m <= 1.0))
            throw ValidationError("config: marginals_a entries must lie in [0,1]");
    if (!(effect > 0.0)) throw ValidationError("config: effect must be > 0");
    if (!(prior_alpha > 0.0)) throw ValidationError("config: prior_alpha must be > 0");
    if (posterior_draws < 100) throw ValidationError("config: posterior_draws >= 100 required");
    if (!(c > 0.0)) throw ValidationError("config: c must be > 0");
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("config: q must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("config: beta must lie in (0,1)");
    if (reps_per_submodel < 1) throw ValidationError("config: reps_per_submodel >= 1 required");
    if (n0_per_group < 1) throw ValidationError("config: n0_per_group >= 1 required");
    if (scheme != "common" && scheme != "boxed")
        throw ValidationError("config: scheme must be common or boxed");
    if (!(box >= 0.0)) throw ValidationError("config: box must be >= 0");
    if (workers < 0) throw ValidationError("config: workers must be >= 0");
    if (max_n_total < 4) throw ValidationError("config: max_n_total too small");
    if (!(alpha_total > 0.0 && alpha_total < 1.0))
        throw ValidationError("config: alpha_total must lie in (0,1)");
    if (baseline_reps_per_submodel < 0 || baseline_draws < 0)
        throw ValidationError("config: baseline overrides must be >= 0");
    if (lp_objective != "maxmin" && lp_objective != "any")
        throw ValidationError("config: lp_objective must be maxmin or any");
    posterior_config().validate();
}

MetricPanel DesignConfig::metric_panel() const {
    MetricPanel panel;
    panel.hypotheses = deltas;
    panel.validate();
    return panel;
}

PosteriorConfig DesignConfig::posterior_config() const {
    PosteriorConfig pc;
    pc.draws = posterior_draws;
    pc.prior_alpha.fill(prior_alpha);
    pc.clip_eps = clip_eps;
    pc.bandwidth_scale = bandwidth_scale;
    return pc;
}

ThresholdScheme DesignConfig::threshold_scheme() const {
    ThresholdScheme s;
    s.kind = (scheme == "boxed") ? ThresholdScheme::Kind::Boxed : ThresholdScheme::Kind::Common;
    s.box = box;
    return s;
}

const ModelFamily& DesignConfig::family() const {
    return independent ? independent_binomial_model() : multinomial_model();
}

PsiMixture DesignConfig::build_psi() const {
    const MetricPanel panel = metric_panel();
    const GroupObjective objective =
        lp_objective == "any" ? GroupObjective::AnyFeasible : GroupObjective::MaxMinCell;
    if (psi_type == "all30") return build_psi_30(marginals_a, effect, panel, objective);
    if (psi_type == "sizes")
        return build_psi_subsets(marginals_a, effect, panel, lambda_sizes, objective);
    std::ifstream in(mixture_file);
    if (!in) throw ValidationError("config: cannot open mixture_file: " + mixture_file);
    std::stringstream buf;
    buf << in.rdbuf();
    PsiMixture psi = parse_mixture(buf.str());
    psi.validate(panel);
    return psi;
}

long DesignConfig::n0_total() const {
    // n0 is specified per group A; the engine searches over total n
    const double nb = static_cast<double>(n0_per_group) / c;
    return n0_per_group + static_cast<long>(std::llround(nb));
}

int DesignConfig::effective_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

DesignSettings DesignConfig::design_settings() const {
    DesignSettings s;
    s.q = q;
    s.beta = beta;
    s.n0 = n0_total();
    s.c = c;
    s.reps_per_submodel = reps_per_submodel;
    s.scheme = threshold_scheme();
    s.seed = seed;
    s.workers = effective_workers();
    s.max_n = max_n_total;
    return s;
}

namespace {

template <typename T>
void read_field(const json& doc, const char* name, T& out) {
    if (!doc.contains(name)) return;
    try {
        out = doc.at(name).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: field '") + name + "' has the wrong type");
    }
}

}  // namespace

DesignConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");

    DesignConfig cfg;
    if (doc.contains("deltas")) {
        const auto& arr = doc.at("deltas");
        if (!arr.is_array() || arr.empty())
            throw ValidationError("config: field 'deltas' must be a nonempty array");
        cfg.deltas.clear();
        for (const auto& d : arr) {
            if (!d.is_array() || d.size() != 2)
                throw ValidationError("config: each delta must be [lower, upper]");
            HypothesisSpec h;
            h.delta_lo = d[0].is_null() ? -kInf : d[0].get<double>();
            h.delta_hi = d[1].is_null() ? kInf : d[1].get<double>();
            cfg.deltas.push_back(h);
        }
    }
    read_field(doc, "psi_type", cfg.psi_type);
    if (doc.contains("marginals_a")) {
        const auto& arr = doc.at("marginals_a");
        if (!arr.is_array() || arr.size() != kOutcomes)
            throw ValidationError("config: field 'marginals_a' must list 5 probabilities");
        for (int k = 0; k < kOutcomes; ++k) cfg.marginals_a[k] = arr[k].get<double>();
    }
    read_field(doc, "effect", cfg.effect);
    read_field(doc, "lambda_sizes", cfg.lambda_sizes);
    read_field(doc, "mixture_file", cfg.mixture_file);
    read_field(doc, "independent", cfg.independent);
    read_field(doc, "prior_alpha", cfg.prior_alpha);
    read_field(doc, "posterior_draws", cfg.posterior_draws);
    read_field(doc, "clip_eps", cfg.clip_eps);
    read_field(doc, "bandwidth_scale", cfg.bandwidth_scale);
    read_field(doc, "lp_objective", cfg.lp_objective);
    read_field(doc, "c", cfg.c);
    read_field(doc, "q", cfg.q);
    read_field(doc, "beta", cfg.beta);
    read_field(doc, "reps_per_submodel", cfg.reps_per_submodel);
    read_field(doc, "n0_per_group", cfg.n0_per_group);
    read_field(doc, "scheme", cfg.scheme);
    read_field(doc, "box", cfg.box);
    read_field(doc, "seed", cfg.seed);
    read_field(doc, "workers", cfg.workers);
    read_field(doc, "max_n_total", cfg.max_n_total);
    read_field(doc, "alpha_total", cfg.alpha_total);
    read_field(doc, "baseline_reps_per_submodel", cfg.baseline_reps_per_submodel);
    read_field(doc, "baseline_draws", cfg.baseline_draws);
    cfg.validate();
    return cfg;
}

DesignConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::string json_endpoint(double x) {
    if (x == kInf || x == -kInf) return "null";
    return fmt17(x);
}

}  // namespace

std::string serialize_config(const DesignConfig& cfg, bool include_runtime) {
    // keys in sorted order; this string is also the hashing domain
    std::ostringstream out;
    out << '{';
    out << "\"alpha_total\":" << fmt17(cfg.alpha_total);
    out << ",\"bandwidth_scale\":" << fmt17(cfg.bandwidth_scale);
    out << ",\"baseline_draws\":" << cfg.baseline_draws;
    out << ",\"baseline_reps_per_submodel\":" << cfg.baseline_reps_per_submodel;
    out << ",\"beta\":" << fmt17(cfg.beta);
    out << ",\"box\":" << fmt17(cfg.box);
    out << ",\"c\":" << fmt17(cfg.c);
    out << ",\"clip_eps\":" << fmt17(cfg.clip_eps);
    out << ",\"deltas\":[";
    for (size_t i = 0; i < cfg.deltas.size(); ++i) {
        if (i) out << ',';
        out << '[' << json_endpoint(cfg.deltas[i].delta_lo) << ','
            << json_endpoint(cfg.deltas[i].delta_hi) << ']';
    }
    out << "]";
    out << ",\"effect\":" << fmt17(cfg.effect);
    out << ",\"independent\":" << (cfg.independent ? "true" : "false");
    out << ",\"lambda_sizes\":[";
    for (size_t i = 0; i < cfg.lambda_sizes.size(); ++i) {
        if (i) out << ',';
        out << cfg.lambda_sizes[i];
    }
    out << "]";
    out << ",\"lp_objective\":\"" << cfg.lp_objective << "\"";
    out << ",\"marginals_a\":[";
    for (int k = 0; k < kOutcomes; ++k) {
        if (k) out << ',';
        out << fmt17(cfg.marginals_a[k]);
    }
    out << "]";
    out << ",\"max_n_total\":" << cfg.max_n_total;
    out << ",\"mixture_file\":\"" << cfg.mixture_file << "\"";
    out << ",\"n0_per_group\":" << cfg.n0_per_group;
    out << ",\"posterior_draws\":" << cfg.posterior_draws;
    out << ",\"prior_alpha\":" << fmt17(cfg.prior_alpha);
    out << ",\"psi_type\":\"" << cfg.psi_type << "\"";
    out << ",\"q\":" << fmt17(cfg.q);
    out << ",\"reps_per_submodel\":" << cfg.reps_per_submodel;
    out << ",\"scheme\":\"" << cfg.scheme << "\"";
    out << ",\"seed\":" << cfg.seed;
    if (include_runtime) out << ",\"workers\":" << cfg.workers;
    out << '}';
    return out.str();
}

std::string config_hash(const DesignConfig& cfg) {
    const std::string canonical = serialize_config(cfg, false);
    uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace abd
