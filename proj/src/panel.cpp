#include "abd/panel.hpp"

#include <cmath>
#include <sstream>

#include "abd/csv.hpp"
#include "abd/errors.hpp"

namespace abd {

void ProbPanel::validate() const {
    const long m = rows();
    if (k <= 0) throw ValidationError("panel: k must be positive");
    if (m <= 0) throw ValidationError("panel: no rows");
    const size_t cells = static_cast<size_t>(m) * k;
    if (probs.size() != cells || logits.size() != cells || truth.size() != cells)
        throw ValidationError("panel: matrix dimensions disagree");
    if (reps_per_submodel > 0 && num_submodels > 0 &&
        m != static_cast<long>(reps_per_submodel) * num_submodels)
        throw ValidationError("panel: rows != reps_per_submodel * num_submodels");
    for (size_t i = 0; i < cells; ++i) {
        if (std::isnan(probs[i]) || std::isnan(logits[i]))
            throw ValidationError("panel: NaN entry");
    }
}

std::string panel_to_csv(const ProbPanel& panel) {
    std::ostringstream out;
    out << "rep,submodel,n,k,prob,logit,truth\n";
    for (long r = 0; r < panel.rows(); ++r) {
        for (int metric = 0; metric < panel.k; ++metric) {
            out << r << ',' << panel.submodel_index[r] << ',' << panel.n << ',' << metric << ','
                << fmt17(panel.prob(r, metric)) << ',' << fmt17(panel.logit_at(r, metric)) << ','
                << (panel.truth_at(r, metric) ? 1 : 0) << "\n";
        }
    }
    return out.str();
}

ProbPanel panel_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("panel: empty input");
    ProbPanel panel;
    long last_rep = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = csv_split(line);
        if (f.size() != 7) throw ValidationError("panel: malformed row");
        const long rep = std::stol(f[0]);
        const int metric = std::stoi(f[3]);
        if (rep != last_rep) {
            if (metric != 0) throw ValidationError("panel: metrics out of order");
            panel.submodel_index.push_back(std::stoi(f[1]));
            panel.n = std::stol(f[2]);
            last_rep = rep;
        }
        panel.probs.push_back(std::stod(f[4]));
        panel.logits.push_back(std::stod(f[5]));
        panel.truth.push_back(static_cast<char>(std::stoi(f[6])));
        panel.k = std::max(panel.k, metric + 1);
    }
    if (panel.submodel_index.empty()) throw ValidationError("panel: no rows");
    panel.validate();
    return panel;
}

}  // namespace abd
