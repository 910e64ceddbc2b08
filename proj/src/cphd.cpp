#include "cdmtt/kalman.hpp"
#include "cdmtt/phd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cdmtt::phd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_binomial(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

/// log of n! / (n - k)!, -inf for k > n.
double log_permutations(int n, int k) {
    if (k > n) return kNegInf;
    return std::lgamma(n + 1.0) - std::lgamma(n - k + 1.0);
}

/// x * log(y) with 0 * log(0) = 0.
double xlogy(double x, double y) {
    if (x == 0.0) return 0.0;
    return y > 0.0 ? x * std::log(y) : kNegInf;
}

void normalize(std::vector<double>& p) {
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0)) throw NumericalError("cphd: cardinality distribution vanished");
    for (double& v : p) v /= total;
}

/// log e_j of positive values, j = 0..n, scaled to avoid overflow.
std::vector<double> log_esf(const std::vector<double>& values) {
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, v);
    std::vector<double> out(values.size() + 1, kNegInf);
    out[0] = 0.0;
    if (scale <= 0.0) return out;
    std::vector<double> scaled(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) scaled[i] = values[i] / scale;
    const auto e = elementary_symmetric(scaled);
    for (std::size_t j = 0; j < e.size(); ++j)
        out[j] = e[j] > 0.0 ? std::log(e[j]) + static_cast<double>(j) * std::log(scale) : kNegInf;
    return out;
}

/// log Upsilon^u(n) for n = 0..n_max with Poisson clutter of mean `clutter_rate`
/// and the normalized intensity folded into `log_e`.
std::vector<double> log_upsilon(const std::vector<double>& log_e, int n_meas, int u, double clutter_rate, double pd,
                                int n_max) {
    std::vector<double> out(n_max + 1, kNegInf);
    std::vector<double> terms;
    for (int n = 0; n <= n_max; ++n) {
        terms.clear();
        for (int j = 0; j <= std::min(n_meas, n - u); ++j) {
            if (log_e[j] == kNegInf) continue;
            const double clutter = -clutter_rate + xlogy(n_meas - j, clutter_rate);
            terms.push_back(clutter + log_permutations(n, j + u) + xlogy(n - j - u, 1.0 - pd) + log_e[j]);
        }
        out[n] = log_sum_exp(terms);
    }
    return out;
}

double log_inner(const std::vector<double>& log_a, const std::vector<double>& p) {
    std::vector<double> terms(p.size());
    for (std::size_t n = 0; n < p.size(); ++n) terms[n] = log_a[n] + (p[n] > 0.0 ? std::log(p[n]) : kNegInf);
    return log_sum_exp(terms);
}

}  // namespace

double CphdState::expected_count() const {
    double n = 0.0;
    for (std::size_t i = 0; i < cardinality.size(); ++i) n += static_cast<double>(i) * cardinality[i];
    return n;
}

CphdState cphd_predict(const CphdState& state, const MotionStep& motion, const birth::BirthPpp& birth) {
    require(state.max_cardinality >= 1, "cphd_predict: max_cardinality must be positive");
    require(!state.cardinality.empty(), "cphd_predict: empty cardinality distribution");
    const PhdState intensity = phd_predict(PhdState{state.intensity}, motion, birth);

    const double ps = motion.p_survival;
    const int n_max = state.max_cardinality;
    const int n_prev = static_cast<int>(state.cardinality.size()) - 1;
    std::vector<double> survived(n_prev + 1, 0.0);
    for (int j = 0; j <= n_prev; ++j)
        for (int l = j; l <= n_prev; ++l)
            if (state.cardinality[l] > 0.0)
                survived[j] += state.cardinality[l] *
                               std::exp(log_binomial(l, j) + xlogy(j, ps) + xlogy(l - j, 1.0 - ps));

    const double lam = birth.weight;
    std::vector<double> card(n_max + 1, 0.0);
    for (int n = 0; n <= n_max; ++n)
        for (int j = 0; j <= std::min(n, n_prev); ++j)
            card[n] += survived[j] * std::exp(-lam + xlogy(n - j, lam) - std::lgamma(n - j + 1.0));
    normalize(card);

    CphdState out;
    out.intensity = intensity.intensity;
    out.cardinality = std::move(card);
    out.max_cardinality = n_max;
    return out;
}

CphdState cphd_predict(const CphdState& state, const DiscretizedTransition& trans, const birth::BirthPpp& birth) {
    return cphd_predict(state, linear_motion(trans), birth);
}

CphdState cphd_update(const CphdState& state, const std::vector<Vector>& meas, const MeasurementModel& mm,
                      const MixtureCaps& caps) {
    mm.validate();
    const int n_max = static_cast<int>(state.cardinality.size()) - 1;
    const int m = static_cast<int>(meas.size());
    const double pd = mm.p_detect;
    const double lam_c = mm.clutter_rate;
    double mass = 0.0;
    for (const auto& c : state.intensity) mass += c.weight;

    CphdState out;
    out.max_cardinality = state.max_cardinality;
    if (!(mass > 0.0)) {
        // no targets in the intensity: only clutter can explain the scan
        out.cardinality.assign(n_max + 1, 0.0);
        out.cardinality[0] = 1.0;
        return out;
    }

    const double box_density = 1.0 / mm.clutter_region.volume();
    std::vector<Innovation> innov;
    innov.reserve(state.intensity.size());
    for (const auto& c : state.intensity) innov.emplace_back(c.density, mm);

    // lik(l, j) = N(z_j; H m_l, S_l); lambda_j = pd <s, lik_j> / c(z_j), s = w / mass
    Matrix lik(static_cast<Eigen::Index>(state.intensity.size()), m);
    std::vector<double> clutter_density(m), lambda(m);
    for (int j = 0; j < m; ++j) {
        require(meas[j].size() == mm.meas_dim(), "cphd_update: measurement dimension mismatch");
        clutter_density[j] = mm.clutter_region.contains(meas[j]) ? box_density : kCphdClutterFloor * box_density;
        double acc = 0.0;
        for (std::size_t l = 0; l < state.intensity.size(); ++l) {
            lik(static_cast<Eigen::Index>(l), j) = std::exp(innov[l].log_likelihood(meas[j]));
            acc += state.intensity[l].weight / mass * lik(static_cast<Eigen::Index>(l), j);
        }
        lambda[j] = pd * acc / clutter_density[j];
    }

    const auto log_e = log_esf(lambda);
    const auto ups0 = log_upsilon(log_e, m, 0, lam_c, pd, n_max);
    const auto ups1 = log_upsilon(log_e, m, 1, lam_c, pd, n_max);
    const double log_den = log_inner(ups0, state.cardinality);
    if (!std::isfinite(log_den)) throw NumericalError("cphd_update: measurement likelihood vanished");

    out.cardinality.resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        out.cardinality[n] =
            state.cardinality[n] > 0.0 ? std::exp(ups0[n] + std::log(state.cardinality[n]) - log_den) : 0.0;
    normalize(out.cardinality);

    const double missed_scale = std::exp(log_inner(ups1, state.cardinality) - log_den);
    for (const auto& c : state.intensity)
        out.intensity.push_back({c.weight / mass * (1.0 - pd) * missed_scale, c.density});

    for (int j = 0; j < m; ++j) {
        std::vector<double> others;
        others.reserve(m - 1);
        for (int i = 0; i < m; ++i)
            if (i != j) others.push_back(lambda[i]);
        const auto ups1_minus = log_upsilon(log_esf(others), m - 1, 1, lam_c, pd, n_max);
        const double scale = std::exp(log_inner(ups1_minus, state.cardinality) - log_den) / clutter_density[j];
        for (std::size_t l = 0; l < state.intensity.size(); ++l) {
            const double w = state.intensity[l].weight / mass * pd * lik(static_cast<Eigen::Index>(l), j) * scale;
            if (w > 0.0) out.intensity.push_back({w, innov[l].posterior(meas[j])});
        }
    }
    out.intensity = reduce_mixture(std::move(out.intensity), caps);
    return out;
}

}  // namespace cdmtt::phd
