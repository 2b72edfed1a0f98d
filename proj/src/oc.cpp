#include "abd/oc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "abd/csv.hpp"
#include "abd/errors.hpp"
#include "abd/stats.hpp"

namespace abd {

void ThresholdVector::validate(int k) const {
    if (static_cast<int>(gamma.size()) != k)
        throw ValidationError("thresholds: dimension mismatch with panel");
    for (double g : gamma)
        if (!(g >= 0.5 && g < 1.0))
            throw ValidationError("thresholds: each gamma_k must lie in [0.5, 1)");
}

ClassificationCounts classify(const ProbPanel& panel, const ThresholdVector& gamma) {
    gamma.validate(panel.k);
    const long m = panel.rows();
    ClassificationCounts counts;
    counts.v.assign(m, 0);
    counts.s.assign(m, 0);
    counts.t.assign(m, 0);
    for (long r = 0; r < m; ++r) {
        int v = 0, s = 0, t = 0;
        for (int k = 0; k < panel.k; ++k) {
            const bool truth = panel.truth_at(r, k);
            if (truth) ++t;
            if (panel.prob(r, k) >= gamma.gamma[k]) {
                if (truth) ++s; else ++v;
            }
        }
        counts.v[r] = v;
        counts.s[r] = s;
        counts.t[r] = t;
    }
    return counts;
}

OcEstimates estimate_oc(const ClassificationCounts& counts) {
    const long m = counts.rows();
    if (m < 1) throw ValidationError("estimate_oc: empty counts");
    if (counts.s.size() != counts.v.size() || counts.t.size() != counts.v.size())
        throw ValidationError("estimate_oc: vector lengths differ");
    double fdr_sum = 0.0, pow_sum = 0.0;
    for (long r = 0; r < m; ++r) {
        fdr_sum += counts.v[r] / std::max<double>(counts.v[r] + counts.s[r], 1.0);
        pow_sum += counts.s[r] / std::max<double>(counts.t[r], 1.0);
    }
    OcEstimates est;
    est.fdr_hat = fdr_sum / m;
    est.power_hat = pow_sum / m;
    double fdr_var = 0.0, pow_var = 0.0;
    for (long r = 0; r < m; ++r) {
        const double fterm = counts.v[r] / std::max<double>(counts.v[r] + counts.s[r], 1.0);
        const double pterm = counts.s[r] / std::max<double>(counts.t[r], 1.0);
        fdr_var += (fterm - est.fdr_hat) * (fterm - est.fdr_hat);
        pow_var += (pterm - est.power_hat) * (pterm - est.power_hat);
    }
    if (m > 1) {
        fdr_var /= (m - 1);
        pow_var /= (m - 1);
    }
    est.fdr_mcse = std::sqrt(fdr_var / m);
    est.power_mcse = std::sqrt(pow_var / m);
    return est;
}

namespace {

long lcm_1_to(int k) {
    long l = 1;
    for (int i = 2; i <= k; ++i) l = std::lcm(l, static_cast<long>(i));
    return l;
}

// Row-level discovery state with exact integer accumulators. v/(v+s) and
// s/max(t,1) have denominators dividing L = lcm(1..K), so the scaled sums
// stay integral and threshold comparisons carry no accumulated rounding.
// Discovered cells of metric k are exactly the first pos[k] entries of its
// descending (prob, row) list.
struct OcState {
    const ProbPanel* panel = nullptr;
    int K = 0;
    long m = 0;
    long L = 1;
    std::vector<int> v, s, t;
    long fdr_num = 0;
    long pow_num = 0;
    std::vector<std::vector<std::pair<double, long>>> cells;  // prob >= 0.5, descending
    std::vector<size_t> pos;
    std::vector<double> gamma;

    explicit OcState(const ProbPanel& p) : panel(&p), K(p.k), m(p.rows()) {
        if (K > 20) throw ValidationError("threshold optimization supports K <= 20");
        L = lcm_1_to(K);
        v.assign(m, 0);
        s.assign(m, 0);
        t.assign(m, 0);
        for (long r = 0; r < m; ++r) {
            int tr = 0;
            for (int k = 0; k < K; ++k)
                if (p.truth_at(r, k)) ++tr;
            t[r] = tr;
        }
        cells.resize(K);
        for (int k = 0; k < K; ++k) {
            for (long r = 0; r < m; ++r) {
                const double prob = p.prob(r, k);
                if (prob >= 0.5) cells[k].push_back({prob, r});
            }
            std::sort(cells[k].begin(), cells[k].end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
        }
        pos.assign(K, 0);
        gamma.assign(K, 2.0);  // sentinel: nothing discovered
    }

    long fdr_term(long r) const { return L * v[r] / std::max(v[r] + s[r], 1); }
    long pow_term(long r) const { return L * s[r] / std::max(t[r], 1); }

    void toggle(long r, int k, int delta) {
        fdr_num -= fdr_term(r);
        pow_num -= pow_term(r);
        if (panel->truth_at(r, k)) s[r] += delta; else v[r] += delta;
        fdr_num += fdr_term(r);
        pow_num += pow_term(r);
    }

    /// Moves metric k's threshold; discovery rule is prob >= g.
    void set_threshold(int k, double g) {
        auto& ck = cells[k];
        size_t& p = pos[k];
        while (p < ck.size() && ck[p].first >= g) {
            toggle(ck[p].second, k, +1);
            ++p;
        }
        while (p > 0 && ck[p - 1].first < g) {
            --p;
            toggle(ck[p].second, k, -1);
        }
        gamma[k] = g;
    }

    double fdr_exact() const {
        return static_cast<double>(fdr_num) / (static_cast<double>(L) * static_cast<double>(m));
    }
    double pow_exact() const {
        return static_cast<double>(pow_num) / (static_cast<double>(L) * static_cast<double>(m));
    }
};

// fdr <= q decision from the exact accumulator; falls back to the plain
// float estimator when the exact value sits within rounding distance of q,
// so optimizer choices always agree with a naive candidate scan.
bool fdr_bound_met(long fdr_num, long L, long m, const ProbPanel& panel,
                   const std::vector<double>& gamma_vec, double q) {
    const long double thresh =
        static_cast<long double>(q) * static_cast<long double>(L) * static_cast<long double>(m);
    const long double diff = static_cast<long double>(fdr_num) - thresh;
    if (diff <= -0.01L) return true;
    if (diff >= 0.01L) return false;
    ThresholdVector tv{gamma_vec};
    return estimate_oc(classify(panel, tv)).fdr_hat <= q;
}

std::vector<double> candidate_values(const ProbPanel& panel) {
    std::vector<double> vals;
    vals.reserve(panel.probs.size() + 1);
    for (double p : panel.probs)
        if (p >= 0.5 && p < 1.0) vals.push_back(p);
    vals.push_back(0.5);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

struct SweepRec {
    double gamma = 0.0;
    long fdr_num = 0;
    long pow_num = 0;
};

// exact accumulators at every common candidate, descending in gamma
std::vector<SweepRec> common_sweep(const ProbPanel& panel, OcState& state) {
    const auto cands = candidate_values(panel);  // ascending
    std::vector<SweepRec> recs;
    recs.reserve(cands.size());
    for (size_t i = cands.size(); i-- > 0;) {
        const double g = cands[i];
        for (int k = 0; k < panel.k; ++k) state.set_threshold(k, g);
        recs.push_back({g, state.fdr_num, state.pow_num});
    }
    return recs;
}

}  // namespace

GammaOptResult optimize_gamma_common(const ProbPanel& panel, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("optimize_gamma: q must lie in (0,1)");
    OcState state(panel);
    const auto recs = common_sweep(panel, state);

    // smallest candidate meeting the bound: scan ascending
    long chosen = -1;
    for (size_t i = recs.size(); i-- > 0;) {
        std::vector<double> gvec(panel.k, recs[i].gamma);
        if (fdr_bound_met(recs[i].fdr_num, state.L, state.m, panel, gvec, q)) {
            chosen = static_cast<long>(i);
            break;
        }
    }

    GammaOptResult result;
    result.feasible = chosen >= 0;
    const double g = result.feasible ? recs[chosen].gamma : recs.front().gamma;
    result.gamma.gamma.assign(panel.k, g);
    result.estimates = estimate_oc(classify(panel, result.gamma));
    return result;
}

std::vector<ThresholdScanRow> common_threshold_scan(const ProbPanel& panel) {
    OcState state(panel);
    const auto recs = common_sweep(panel, state);
    std::vector<ThresholdScanRow> rows;
    rows.reserve(recs.size());
    const double scale = static_cast<double>(state.L) * static_cast<double>(state.m);
    for (const auto& rec : recs)
        rows.push_back({rec.gamma, static_cast<double>(rec.fdr_num) / scale,
                        static_cast<double>(rec.pow_num) / scale});
    return rows;
}

std::string scan_to_csv(const std::vector<ThresholdScanRow>& rows) {
    std::ostringstream out;
    out << "gamma,fdr_hat,power_hat\n";
    for (const auto& r : rows)
        out << fmt17(r.gamma) << ',' << fmt17(r.fdr_hat) << ',' << fmt17(r.power_hat) << "\n";
    return out.str();
}

namespace {

struct MetricCuts {
    // ascending unique probability values in [0.5, 1); threshold equal to
    // values[j] discovers cells with prob >= values[j]
    std::vector<double> values;
    double above_all = 0.0;  // representative threshold discovering nothing
    bool above_all_valid = false;
};

MetricCuts metric_cuts(const ProbPanel& panel, int k) {
    MetricCuts cuts;
    double max_any = 0.0;
    for (long r = 0; r < panel.rows(); ++r) {
        const double p = panel.prob(r, k);
        max_any = std::max(max_any, p);
        if (p >= 0.5 && p < 1.0) cuts.values.push_back(p);
    }
    std::sort(cuts.values.begin(), cuts.values.end());
    cuts.values.erase(std::unique(cuts.values.begin(), cuts.values.end()), cuts.values.end());
    if (max_any < 0.5) {
        cuts.above_all = 0.5;  // no cell can be discovered at any valid threshold
        cuts.above_all_valid = true;
    } else if (max_any < 1.0) {
        const double rep = std::nextafter(max_any, 2.0);
        if (rep < 1.0) {
            cuts.above_all = rep;
            cuts.above_all_valid = true;
        }
    }
    return cuts;
}

GammaOptResult exhaustive_boxed(const ProbPanel& panel, double q, double box,
                                const std::vector<MetricCuts>& cuts) {
    const int K = panel.k;
    std::vector<size_t> idx(K, 0);  // index into values; == size() means no discovery
    GammaOptResult best;
    best.feasible = false;
    double best_power = -1.0;
    std::vector<double> best_gamma;

    std::vector<double> gvec(K);
    for (;;) {
        bool valid = true;
        double min_hi = kInf;
        for (int k = 0; k < K; ++k) {
            const auto& ck = cuts[k];
            if (idx[k] < ck.values.size()) gvec[k] = ck.values[idx[k]];
            else if (ck.above_all_valid) gvec[k] = ck.above_all;
            else { valid = false; break; }
            min_hi = std::min(min_hi, gvec[k]);
        }
        if (valid) {
            // tightest representatives: cap everything at min_hi + box
            for (int k = 0; k < K; ++k) gvec[k] = std::min(gvec[k], min_hi + box);
            // capped thresholds must still realize the selected cuts
            for (int k = 0; k < K && valid; ++k) {
                const auto& vals = cuts[k].values;
                if (idx[k] < vals.size()) {
                    if (idx[k] == 0) valid = gvec[k] >= 0.5;
                    else valid = gvec[k] > vals[idx[k] - 1];
                } else if (!vals.empty()) {
                    valid = gvec[k] > vals.back();
                }
            }
        }
        if (valid) {
            ThresholdVector tv{gvec};
            const auto est = estimate_oc(classify(panel, tv));
            if (est.fdr_hat <= q) {
                const bool better =
                    est.power_hat > best_power + 1e-15 ||
                    (std::fabs(est.power_hat - best_power) <= 1e-15 && !best_gamma.empty() &&
                     gvec < best_gamma);
                if (best_gamma.empty() || better) {
                    best_power = est.power_hat;
                    best_gamma = gvec;
                    best.feasible = true;
                    best.gamma.gamma = gvec;
                    best.estimates = est;
                }
            }
        }
        int k = K - 1;
        while (k >= 0) {
            if (++idx[k] <= cuts[k].values.size()) break;
            idx[k] = 0;
            --k;
        }
        if (k < 0) break;
    }

    if (!best.feasible) return optimize_gamma_common(panel, q);
    return best;
}

}  // namespace

GammaOptResult optimize_gamma_boxed(const ProbPanel& panel, double q, double box) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("optimize_gamma: q must lie in (0,1)");
    if (!(box >= 0.0)) throw ValidationError("optimize_gamma: box must be >= 0");
    if (box == 0.0) return optimize_gamma_common(panel, q);

    const int K = panel.k;
    std::vector<MetricCuts> cuts(K);
    double combos = 1.0;
    for (int k = 0; k < K; ++k) {
        cuts[k] = metric_cuts(panel, k);
        combos *= static_cast<double>(cuts[k].values.size() + 1);
    }
    if (combos <= 2e5 && combos * static_cast<double>(panel.rows()) <= 2e6)
        return exhaustive_boxed(panel, q, box, cuts);

    const GammaOptResult common = optimize_gamma_common(panel, q);
    if (!common.feasible) return common;

    OcState state(panel);
    for (int k = 0; k < K; ++k) state.set_threshold(k, common.gamma.gamma[k]);
    long cur_pow = state.pow_num;

    // move distances: one candidate step plus coarser jumps so the walk can
    // cross flat stretches of the piecewise-constant power surface
    const double deltas[4] = {0.005, 0.01, 0.025, 0.05};
    auto lower_by = [&](int k, double g, double delta) -> double {
        const auto& vals = cuts[k].values;
        const double target = (delta == 0.0) ? g : g - delta;
        auto it = std::lower_bound(vals.begin(), vals.end(), target);
        if (delta == 0.0) {
            // next candidate strictly below g
            if (it == vals.begin()) return (g > 0.5) ? 0.5 : -1.0;
            return *std::prev(it);
        }
        // largest candidate <= g - delta
        if (it != vals.end() && *it == target) return target >= 0.5 ? target : -1.0;
        if (it == vals.begin()) return (target >= 0.5 && g > 0.5) ? 0.5 : -1.0;
        const double v = *std::prev(it);
        return (v < g && v >= 0.5) ? v : -1.0;
    };
    auto raise_by = [&](int k, double g, double delta) -> double {
        const auto& vals = cuts[k].values;
        const double target = (delta == 0.0) ? g : g + delta;
        auto it = (delta == 0.0) ? std::upper_bound(vals.begin(), vals.end(), g)
                                 : std::lower_bound(vals.begin(), vals.end(), target);
        if (it != vals.end() && *it > g) return *it;
        if (cuts[k].above_all_valid && cuts[k].above_all > g) return cuts[k].above_all;
        return -1.0;
    };
    auto box_ok = [&](const std::vector<double>& g) {
        const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
        return *hi - *lo <= box + 1e-12;
    };

    // greedy ascent from the common solution: single lowers plus lower/raise
    // pairs at several scales; every accepted move strictly improves power
    // while keeping the bound
    const int max_iters = 4000;
    std::vector<double> trial(K);
    for (int iter = 0; iter < max_iters; ++iter) {
        long best_gain = 0;
        std::vector<double> best_vec;
        auto consider = [&](const std::vector<double>& cand) {
            if (!box_ok(cand)) return;
            const std::vector<double> saved = state.gamma;
            for (int k = 0; k < K; ++k) state.set_threshold(k, cand[k]);
            const long gain = state.pow_num - cur_pow;
            const bool ok = gain > 0 && fdr_bound_met(state.fdr_num, state.L, state.m, panel,
                                                      cand, q);
            if (ok && (gain > best_gain || (gain == best_gain && cand < best_vec))) {
                best_gain = gain;
                best_vec = cand;
            }
            for (int k = 0; k < K; ++k) state.set_threshold(k, saved[k]);
        };
        std::vector<double> downs, ups;
        for (int k = 0; k < K; ++k) {
            downs.clear();
            downs.push_back(lower_by(k, state.gamma[k], 0.0));
            for (double d : deltas) downs.push_back(lower_by(k, state.gamma[k], d));
            std::sort(downs.begin(), downs.end());
            downs.erase(std::unique(downs.begin(), downs.end()), downs.end());
            for (double down : downs) {
                if (down < 0.0) continue;
                trial = state.gamma;
                trial[k] = down;
                consider(trial);
                for (int h = 0; h < K; ++h) {
                    if (h == k) continue;
                    ups.clear();
                    ups.push_back(raise_by(h, state.gamma[h], 0.0));
                    for (double d : deltas) ups.push_back(raise_by(h, state.gamma[h], d));
                    std::sort(ups.begin(), ups.end());
                    ups.erase(std::unique(ups.begin(), ups.end()), ups.end());
                    for (double up : ups) {
                        if (up < 0.0) continue;
                        trial = state.gamma;
                        trial[k] = down;
                        trial[h] = up;
                        consider(trial);
                    }
                }
            }
        }
        if (best_vec.empty()) break;
        for (int k = 0; k < K; ++k) state.set_threshold(k, best_vec[k]);
        cur_pow = state.pow_num;
    }

    // local grid polish at 1e-4 resolution around the ascent fixed point
    const double step = 1e-4;
    const int window = 50;
    for (int sweep = 0; sweep < 3; ++sweep) {
        bool improved = false;
        for (int k = 0; k < K; ++k) {
            const double center = state.gamma[k];
            double best_g = center;
            long best_pow = state.pow_num;
            for (int j = -window; j <= window; ++j) {
                if (j == 0) continue;
                const double g = center + j * step;
                if (g < 0.5 || g >= 1.0) continue;
                std::vector<double> cand = state.gamma;
                cand[k] = g;
                if (!box_ok(cand)) continue;
                state.set_threshold(k, g);
                if (state.pow_num > best_pow &&
                    fdr_bound_met(state.fdr_num, state.L, state.m, panel, cand, q)) {
                    best_pow = state.pow_num;
                    best_g = g;
                }
                state.set_threshold(k, center);
            }
            if (best_g != center) {
                state.set_threshold(k, best_g);
                cur_pow = state.pow_num;
                improved = true;
            }
        }
        if (!improved) break;
    }

    GammaOptResult result;
    result.feasible = true;
    result.gamma.gamma = state.gamma;
    result.estimates = estimate_oc(classify(panel, result.gamma));
    return result;
}

GammaOptResult optimize_gamma(const ProbPanel& panel, double q, const ThresholdScheme& scheme) {
    if (scheme.kind == ThresholdScheme::Kind::Common) return optimize_gamma_common(panel, q);
    return optimize_gamma_boxed(panel, q, scheme.box);
}

}  // namespace abd
