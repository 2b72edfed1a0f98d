#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abd {

/// RNG provenance of a panel plus numeric warnings collected while building.
struct SeedRecord {
    uint64_t seed = 0;
    uint32_t pass = 0;     // simulation pass tag entering every stream id
    std::string source;    // producing family or synthesizer
    long rejected_draws = 0;
    bool reject_warning = false;  // some repetition rejected > 1% of its draws
};

/// Estimated posterior probabilities for m repetitions by K metrics, stored
/// row-major with per-row submodel labels and per-cell truth flags. Rows are
/// grouped by submodel: r = submodel * reps_per_submodel + rep.
struct ProbPanel {
    int k = 0;
    long n = 0;  // total sample size the panel was generated at
    int reps_per_submodel = 0;
    int num_submodels = 0;
    std::vector<double> probs;        // m x k
    std::vector<double> logits;       // m x k
    std::vector<int> submodel_index;  // m
    std::vector<char> truth;          // m x k
    SeedRecord seed_record;

    long rows() const { return static_cast<long>(submodel_index.size()); }
    double prob(long r, int metric) const { return probs[static_cast<size_t>(r) * k + metric]; }
    double logit_at(long r, int metric) const {
        return logits[static_cast<size_t>(r) * k + metric];
    }
    bool truth_at(long r, int metric) const {
        return truth[static_cast<size_t>(r) * k + metric] != 0;
    }

    void validate() const;
};

/// Flat tabular export: columns (rep, submodel, n, k, prob, logit, truth),
/// 17-significant-digit decimals, LF endings. rep is the global row index.
std::string panel_to_csv(const ProbPanel& panel);
ProbPanel panel_from_csv(const std::string& text);

}  // namespace abd
