#include "abd/construct.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abd/csv.hpp"
#include "abd/errors.hpp"

namespace abd {

namespace {

const char* kMarginalNames[kOutcomes] = {"pi_1", "pi_2", "pi_3", "pi_4", "pi_5"};

void check_marginals(const std::array<double, kOutcomes>& m) {
    for (int k = 0; k < kOutcomes; ++k) {
        if (!(m[k] >= 0.0 && m[k] <= 1.0))
            throw ConstructionError(std::string("construct_group: ") + kMarginalNames[k] +
                                    " must lie in [0,1]");
    }
    for (int k = 1; k <= 3; ++k) {
        if (m[k] > m[0] + 1e-12)
            throw ConstructionError(std::string("construct_group: ordering violated: ") +
                                    kMarginalNames[k] + " <= pi_1 required");
    }
    if (m[4] > m[3] + 1e-12)
        throw ConstructionError("construct_group: ordering violated: pi_5 <= pi_4 required");
}

}  // namespace

MultinomialGroupParams construct_group(const std::array<double, kOutcomes>& marginals,
                                       GroupObjective objective) {
    check_marginals(marginals);

    // cells made impossible by zero marginals are fixed before solving
    std::array<bool, kCells> pinned{};
    if (marginals[0] <= 0.0)
        for (int v = 1; v < kCells; ++v) pinned[v] = true;
    if (marginals[0] >= 1.0) pinned[0] = true;
    for (int k = 1; k < kOutcomes; ++k) {
        if (marginals[k] <= 0.0)
            for (int cell : marginal_cells(k)) pinned[cell] = true;
    }

    // variables: 13 cells plus the min-cell auxiliary t
    const int t_var = kCells;
    LpProblem lp;
    lp.num_vars = kCells + 1;
    lp.objective.assign(lp.num_vars, 0.0);
    lp.objective[t_var] = 1.0;
    lp.lo.assign(lp.num_vars, 0.0);
    lp.hi.assign(lp.num_vars, 1.0);
    for (int v = 0; v < kCells; ++v)
        if (pinned[v]) lp.hi[v] = 0.0;

    auto add_eq = [&](const std::vector<int>& cells, double rhs) {
        std::vector<double> row(lp.num_vars, 0.0);
        for (int cell : cells) row[cell] = 1.0;
        lp.eq_lhs.push_back(std::move(row));
        lp.eq_rhs.push_back(rhs);
    };
    {
        std::vector<int> all(kCells);
        for (int v = 0; v < kCells; ++v) all[v] = v;
        add_eq(all, 1.0);                       // simplex sum
    }
    add_eq({0}, 1.0 - marginals[0]);            // engagement complement
    for (int k = 1; k < kOutcomes; ++k) add_eq(marginal_cells(k), marginals[k]);

    std::vector<std::string> row_names = {"simplex sum", "pi_1 marginal", "pi_2 marginal",
                                          "pi_3 marginal", "pi_4 marginal", "pi_5 marginal"};
    if (objective == GroupObjective::MaxMinCell) {
        for (int v = 1; v < kCells; ++v) {
            if (pinned[v]) continue;
            std::vector<double> row(lp.num_vars, 0.0);
            row[t_var] = 1.0;
            row[v] = -1.0;
            lp.le_lhs.push_back(std::move(row));
            lp.le_rhs.push_back(0.0);
            row_names.push_back("t <= eta_" + std::to_string(v + 1));
        }
    } else {
        lp.objective[t_var] = 0.0;
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        const std::string which = (sol.worst_constraint >= 0 &&
                                   sol.worst_constraint < static_cast<int>(row_names.size()))
                                      ? row_names[sol.worst_constraint]
                                      : "unknown";
        throw ConstructionError("construct_group: infeasible marginals (binding: " + which + ")");
    }

    MultinomialGroupParams params;
    double sum = 0.0;
    for (int v = 0; v < kCells; ++v) {
        double x = sol.x[v];
        if (x < 0.0) {
            if (x < -1e-12)
                throw NumericError("construct_group: solver returned eta < -1e-12");
            x = 0.0;
        }
        params.eta[v] = x;
        sum += x;
    }
    for (int v = 0; v < kCells; ++v) params.eta[v] /= sum;
    params.validate();
    return params;
}

Submodel construct_submodel(const SubmodelTarget& target, const MetricPanel& panel,
                            GroupObjective objective) {
    if (panel.k() != kOutcomes)
        throw ValidationError("construct_submodel: panel must carry one hypothesis per outcome");
    std::array<double, kOutcomes> marginals_b{};
    for (int k = 0; k < kOutcomes; ++k) {
        marginals_b[k] = target.marginals_a[k] * (1.0 + target.lift_targets[k]);
        if (marginals_b[k] < 0.0 || marginals_b[k] > 1.0)
            throw ConstructionError("construct_submodel: lift target pushes " +
                                    std::string(kMarginalNames[k]) + " outside [0,1]");
    }
    Submodel submodel;
    submodel.params_a = construct_group(target.marginals_a, objective);
    submodel.params_b = construct_group(marginals_b, objective);
    submodel.false_set = target.false_set;
    submodel.weight = target.weight;
    truth_flags(submodel, panel);  // throws when targets mislabel the scenario
    return submodel;
}

PsiMixture build_psi_subsets(const std::array<double, kOutcomes>& marginals_a, double effect,
                             const MetricPanel& panel, const std::vector<int>& sizes,
                             GroupObjective objective) {
    if (!(effect > 0.0)) throw ValidationError("build_psi: effect must be > 0");
    for (int s : sizes)
        if (s < 1 || s >= kOutcomes)
            throw ValidationError("build_psi: subset sizes must lie in [1, K-1]");

    std::vector<std::vector<int>> subsets;
    for (int s : sizes) {
        // lexicographic subsets of {0..4} of size s
        std::vector<int> idx(s);
        for (int i = 0; i < s; ++i) idx[i] = i;
        for (;;) {
            subsets.push_back(idx);
            int i = s - 1;
            while (i >= 0 && idx[i] == kOutcomes - s + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
        }
    }

    PsiMixture psi;
    const double w = 1.0 / static_cast<double>(subsets.size());
    for (const auto& lambda : subsets) {
        SubmodelTarget target;
        target.marginals_a = marginals_a;
        for (int k = 0; k < kOutcomes; ++k) target.lift_targets[k] = effect;
        for (int k : lambda) target.lift_targets[k] = 0.0;
        target.false_set = lambda;
        target.weight = w;
        psi.submodels.push_back(construct_submodel(target, panel, objective));
    }
    psi.validate(panel);
    return psi;
}

PsiMixture build_psi_30(const std::array<double, kOutcomes>& marginals_a, double effect,
                        const MetricPanel& panel, GroupObjective objective) {
    return build_psi_subsets(marginals_a, effect, panel, {1, 2, 3, 4}, objective);
}

std::string serialize_mixture(const PsiMixture& psi) {
    std::ostringstream out;
    out << "submodel,weight,lambda";
    for (int v = 1; v <= kCells; ++v) out << ",eta_a_" << v;
    for (int v = 1; v <= kCells; ++v) out << ",eta_b_" << v;
    out << "\n";
    for (int i = 0; i < psi.size(); ++i) {
        const Submodel& s = psi.submodels[i];
        out << i << "," << fmt17(s.weight) << ",";
        for (size_t j = 0; j < s.false_set.size(); ++j) {
            if (j) out << ';';
            out << s.false_set[j];
        }
        for (int v = 0; v < kCells; ++v) out << "," << fmt17(s.params_a.eta[v]);
        for (int v = 0; v < kCells; ++v) out << "," << fmt17(s.params_b.eta[v]);
        out << "\n";
    }
    return out.str();
}

PsiMixture parse_mixture(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("mixture: empty input");
    PsiMixture psi;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = csv_split(line);
        if (fields.size() != 3 + 2 * kCells)
            throw ValidationError("mixture: malformed row");
        Submodel s;
        s.weight = std::stod(fields[1]);
        if (!fields[2].empty()) {
            std::istringstream ls(fields[2]);
            std::string tok;
            while (std::getline(ls, tok, ';')) s.false_set.push_back(std::stoi(tok));
        }
        for (int v = 0; v < kCells; ++v) s.params_a.eta[v] = std::stod(fields[3 + v]);
        for (int v = 0; v < kCells; ++v) s.params_b.eta[v] = std::stod(fields[3 + kCells + v]);
        psi.submodels.push_back(std::move(s));
    }
    return psi;
}

}  // namespace abd
