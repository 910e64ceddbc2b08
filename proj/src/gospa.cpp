#include "cdmtt/gospa.hpp"

#include "cdmtt/assignment.hpp"

#include <cmath>

namespace cdmtt {

void GospaParams::validate() const {
    require(cutoff > 0.0 && std::isfinite(cutoff), "gospa: cutoff must be positive");
    require(order >= 1.0 && std::isfinite(order), "gospa: order must be >= 1");
    if (alpha != 2.0) throw InvalidInput("gospa: only alpha = 2 is supported");
}

GospaResult gospa(std::span<const Vector> truth, std::span<const Vector> estimates, const GospaParams& params) {
    params.validate();
    const double c_p = std::pow(params.cutoff, params.order);
    const double unmatched = c_p / params.alpha;
    const auto nt = static_cast<Eigen::Index>(truth.size());
    const auto ne = static_cast<Eigen::Index>(estimates.size());

    GospaResult out;
    if (nt > 0 && ne > 0) {
        // Rows are the smaller set. Pairs at or beyond the cutoff cost as much
        // as leaving both unmatched (c^p = 2 c^p / alpha), so forbidding them
        // with dummy columns at c^p / alpha per row keeps the minimum unchanged.
        const bool truth_rows = nt <= ne;
        const auto rows = truth_rows ? nt : ne;
        const auto cols = truth_rows ? ne : nt;
        Matrix cost = Matrix::Constant(rows, cols + rows, assignment::kForbidden);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                const Vector& x = truth_rows ? truth[i] : truth[j];
                const Vector& y = truth_rows ? estimates[j] : estimates[i];
                require(x.size() == y.size(), "gospa: dimension mismatch between sets");
                const double d = (x - y).norm();
                if (d < params.cutoff) cost(i, j) = std::pow(d, params.order) - 2.0 * unmatched;
            }
            cost(i, cols + i) = 0.0;
        }
        const auto sol = assignment::solve_optimal(cost);
        int matched = 0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            const int j = sol.row_to_col[i];
            if (j < cols) {
                out.localisation += cost(i, j) + 2.0 * unmatched;
                ++matched;
            }
        }
        out.n_missed = static_cast<int>(nt) - matched;
        out.n_false = static_cast<int>(ne) - matched;
    } else {
        out.n_missed = static_cast<int>(nt);
        out.n_false = static_cast<int>(ne);
    }
    out.missed = unmatched * out.n_missed;
    out.false_targets = unmatched * out.n_false;
    out.total = std::pow(out.localisation + out.missed + out.false_targets, 1.0 / params.order);
    return out;
}

GospaResult rms_over_runs(std::span<const GospaResult> runs) {
    require(!runs.empty(), "rms_over_runs: no runs");
    GospaResult out;
    double sum_sq = 0.0;
    for (const auto& r : runs) {
        sum_sq += r.total * r.total;
        out.localisation += r.localisation;
        out.missed += r.missed;
        out.false_targets += r.false_targets;
    }
    const double n = static_cast<double>(runs.size());
    out.localisation /= n;
    out.missed /= n;
    out.false_targets /= n;
    out.total = std::sqrt(sum_sq / n);
    return out;
}

}  // namespace cdmtt
