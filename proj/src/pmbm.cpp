#include "cdmtt/pmbm.hpp"

#include "cdmtt/assignment.hpp"
#include "cdmtt/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace cdmtt::pmbm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

bool same_density(const Gaussian& a, const Gaussian& b) {
    if (a.dim() != b.dim()) return false;
    return (a.mean - b.mean).norm() <= 1e-9 * (1.0 + a.mean.norm()) &&
           (a.cov - b.cov).norm() <= 1e-9 * (1.0 + a.cov.norm());
}

void prune_ppp(GaussianMixture& ppp, double floor) {
    std::erase_if(ppp, [floor](const WeightedGaussian& c) { return c.weight < floor; });
}

/// Per local hypothesis of the predicted posterior: where its children live in
/// the updated tree and the log factors they multiply the parent weight by.
struct Expansion {
    int missed = -1;
    double log_miss = kNegInf;
    std::vector<int> detected;          // by measurement, -1 when gated out
    std::vector<double> log_detect;     // by measurement
};

struct Candidate {
    double log_weight;
    std::vector<int> selection;
};

/// Zero out tiny existences, drop unreferenced locals and Bernoullis that exist
/// in no global, then merge globals that became identical.
void cleanup(PmbmPosterior& post, double existence_floor) {
    for (auto& tree : post.bernoullis)
        for (auto& h : tree.hypotheses)
            if (h.existence < existence_floor) h.existence = 0.0;

    const std::size_t n = post.bernoullis.size();
    std::vector<int> new_index(n, -1);
    std::vector<BernoulliTree> kept;
    std::vector<std::vector<int>> remaps(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& hyps = post.bernoullis[i].hypotheses;
        std::vector<char> used(hyps.size(), 0);
        for (const auto& g : post.globals) used[g.selection[i]] = 1;
        bool exists = false;
        for (std::size_t h = 0; h < hyps.size(); ++h) exists = exists || (used[h] && hyps[h].existence > 0.0);
        if (!exists) continue;
        BernoulliTree tree;
        remaps[i].assign(hyps.size(), -1);
        for (std::size_t h = 0; h < hyps.size(); ++h) {
            if (!used[h]) continue;
            remaps[i][h] = static_cast<int>(tree.hypotheses.size());
            tree.hypotheses.push_back(std::move(hyps[h]));
        }
        new_index[i] = static_cast<int>(kept.size());
        kept.push_back(std::move(tree));
    }

    std::map<std::vector<int>, std::size_t> seen;
    std::vector<GlobalHypothesis> merged;
    for (const auto& g : post.globals) {
        GlobalHypothesis ng;
        ng.weight = g.weight;
        ng.selection.reserve(kept.size());
        for (std::size_t i = 0; i < n; ++i)
            if (new_index[i] >= 0) ng.selection.push_back(remaps[i][g.selection[i]]);
        auto [it, inserted] = seen.try_emplace(ng.selection, merged.size());
        if (inserted)
            merged.push_back(std::move(ng));
        else
            merged[it->second].weight += ng.weight;
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const GlobalHypothesis& a, const GlobalHypothesis& b) { return a.weight > b.weight; });
    post.bernoullis = std::move(kept);
    post.globals = std::move(merged);
}

}  // namespace

void PmbmPosterior::validate() const {
    require(!globals.empty(), "PmbmPosterior: no global hypotheses");
    double total = 0.0;
    for (const auto& g : globals) {
        require(g.weight >= 0.0, "PmbmPosterior: negative global weight");
        require(g.selection.size() == bernoullis.size(), "PmbmPosterior: selection size differs from Bernoulli count");
        for (std::size_t i = 0; i < bernoullis.size(); ++i)
            require(g.selection[i] >= 0 &&
                        static_cast<std::size_t>(g.selection[i]) < bernoullis[i].hypotheses.size(),
                    "PmbmPosterior: selection index out of range");
        total += g.weight;
    }
    require(std::abs(total - 1.0) <= 1e-9, "PmbmPosterior: global weights do not sum to one");
    for (const auto& tree : bernoullis) {
        require(!tree.hypotheses.empty(), "PmbmPosterior: empty Bernoulli tree");
        for (const auto& h : tree.hypotheses)
            require(h.existence >= 0.0 && h.existence <= 1.0, "PmbmPosterior: existence outside [0, 1]");
    }
    for (const auto& c : ppp) require(c.weight >= 0.0, "PmbmPosterior: negative PPP weight");
}

void PruneConfig::validate() const {
    require(max_globals >= 1, "PruneConfig: max_globals must be positive");
    require(ppp_weight_floor > 0.0 && mbm_weight_floor > 0.0 && existence_floor > 0.0,
            "PruneConfig: pruning thresholds must be positive");
    require(gate_threshold > 0.0, "PruneConfig: gate_threshold must be positive");
    require(estimate_threshold > 0.0 && estimate_threshold < 1.0, "PruneConfig: estimate_threshold must lie in (0, 1)");
}

PmbmPosterior predict(PmbmPosterior post, const MotionStep& motion, const birth::BirthPpp& birth) {
    require(static_cast<bool>(motion.propagate), "pmbm::predict: missing propagator");
    require(motion.p_survival >= 0.0 && motion.p_survival <= 1.0, "pmbm::predict: survival probability outside [0, 1]");
    require(birth.weight >= 0.0, "pmbm::predict: negative birth weight");

    PmbmPosterior out = std::move(post);
    for (auto& c : out.ppp) {
        c.weight *= motion.p_survival;
        c.density = motion.propagate(c.density);
    }
    const auto& propagate_track = motion.for_tracks();
    for (auto& tree : out.bernoullis)
        for (auto& h : tree.hypotheses) {
            h.existence *= motion.p_survival;
            h.density = propagate_track(h.density);
        }

    if (birth.weight > 0.0) {
        if (!out.ppp.empty())
            require(birth.density.dim() == out.ppp.front().density.dim(), "pmbm::predict: birth dimension mismatch");
        auto same = std::find_if(out.ppp.begin(), out.ppp.end(),
                                 [&](const WeightedGaussian& c) { return same_density(c.density, birth.density); });
        if (same != out.ppp.end())
            same->weight += birth.weight;
        else
            out.ppp.push_back({birth.weight, birth.density});
    }
    return out;
}

PmbmPosterior predict(PmbmPosterior post, const DiscretizedTransition& trans, const birth::BirthPpp& birth,
                      bool bernoulli_offset) {
    return predict(std::move(post), linear_motion(trans, bernoulli_offset), birth);
}

PmbmPosterior update(const PmbmPosterior& pred, const std::vector<Vector>& meas, const MeasurementModel& mm,
                     const PruneConfig& cfg) {
    cfg.validate();
    mm.validate();
    require(!pred.globals.empty(), "pmbm::update: no global hypotheses");
    for (const auto& z : meas) require(z.size() == mm.meas_dim(), "pmbm::update: measurement dimension mismatch");

    const int m = static_cast<int>(meas.size());
    const double pd = mm.p_detect;
    const double log_pd = safe_log(pd);
    const int step = pred.scans + 1;
    const std::size_t n_old = pred.bernoullis.size();

    // New Bernoullis: clutter or first detection of an undetected target.
    std::vector<double> log_new(m, kNegInf);
    std::vector<LocalHypothesis> first_detection(m);
    {
        std::vector<Innovation> innov;
        innov.reserve(pred.ppp.size());
        for (const auto& c : pred.ppp) innov.emplace_back(c.density, mm);
        std::vector<double> lw(pred.ppp.size());
        for (int j = 0; j < m; ++j) {
            const Vector& z = meas[j];
            for (std::size_t l = 0; l < pred.ppp.size(); ++l)
                lw[l] = safe_log(pred.ppp[l].weight) + innov[l].log_likelihood(z);
            const double log_e = log_pd + log_sum_exp(lw);
            log_new[j] = log_add_exp(safe_log(mm.clutter_intensity(z)), log_e);

            LocalHypothesis& h = first_detection[j];
            h.log_weight = log_new[j];
            h.history = {{step, j}};
            if (std::isfinite(log_e)) {
                h.existence = std::min(1.0, std::exp(log_e - log_new[j]));
                const double top = *std::max_element(lw.begin(), lw.end());
                std::vector<double> mix_w(lw.size());
                std::vector<Gaussian> comps(lw.size());
                for (std::size_t l = 0; l < lw.size(); ++l) {
                    mix_w[l] = std::exp(lw[l] - top);
                    comps[l] = innov[l].posterior(z);
                }
                h.density = moment_match(mix_w, comps);
            } else {
                h.existence = 0.0;
                const auto n = pred.ppp.empty() ? mm.h.cols() : pred.ppp.front().density.dim();
                h.density = {Vector::Zero(n), Matrix::Identity(n, n)};
            }
        }
    }

    // Children of every existing local hypothesis.
    PmbmPosterior out;
    out.scans = step;
    out.globals.clear();
    out.bernoullis.resize(n_old + static_cast<std::size_t>(m));
    std::vector<std::vector<Expansion>> expansions(n_old);
    std::vector<char> gated_anywhere(m, 0);
    for (std::size_t i = 0; i < n_old; ++i) {
        const auto& hyps = pred.bernoullis[i].hypotheses;
        auto& children = out.bernoullis[i].hypotheses;
        expansions[i].resize(hyps.size());
        for (std::size_t a = 0; a < hyps.size(); ++a) {
            const LocalHypothesis& parent = hyps[a];
            Expansion& ex = expansions[i][a];
            const double r = parent.existence;
            const double miss = 1.0 - r * pd;
            ex.log_miss = safe_log(miss);
            LocalHypothesis missed = parent;
            missed.log_weight = parent.log_weight + ex.log_miss;
            missed.existence = miss > 0.0 ? std::clamp(r * (1.0 - pd) / miss, 0.0, 1.0) : 0.0;
            ex.missed = static_cast<int>(children.size());
            children.push_back(std::move(missed));

            ex.detected.assign(m, -1);
            ex.log_detect.assign(m, kNegInf);
            if (r <= 0.0 || pd <= 0.0 || m == 0) continue;
            const Innovation innov(parent.density, mm);
            for (int j = 0; j < m; ++j) {
                if (innov.mahalanobis2(meas[j]) > cfg.gate_threshold) continue;
                LocalHypothesis det;
                ex.log_detect[j] = std::log(r) + log_pd + innov.log_likelihood(meas[j]);
                det.log_weight = parent.log_weight + ex.log_detect[j];
                det.existence = 1.0;
                det.density = innov.posterior(meas[j]);
                det.history = parent.history;
                det.history.push_back({step, j});
                ex.detected[j] = static_cast<int>(children.size());
                children.push_back(std::move(det));
                gated_anywhere[j] = 1;
            }
        }
    }
    for (int j = 0; j < m; ++j) {
        LocalHypothesis absent;
        absent.log_weight = 0.0;
        absent.existence = 0.0;
        absent.density = first_detection[j].density;
        out.bernoullis[n_old + j].hypotheses = {std::move(absent), std::move(first_detection[j])};
    }

    // A measurement that neither clutter, the PPP nor any track can produce
    // carries no information about the hypotheses; it is left unassociated.
    std::vector<char> ignored(m, 0);
    for (int j = 0; j < m; ++j) ignored[j] = !std::isfinite(log_new[j]) && !gated_anywhere[j];

    struct Problem {
        const GlobalHypothesis* prior;
        std::vector<int> tracks;
        std::vector<int> rows;
        Matrix cost;
        std::size_t k = 0;
        std::vector<assignment::Assignment> best;
    };
    std::vector<Problem> problems;
    for (const auto& prior : pred.globals) {
        if (prior.weight <= 0.0) continue;
        Problem pb;
        pb.prior = &prior;
        for (std::size_t i = 0; i < n_old; ++i) {
            const Expansion& ex = expansions[i][prior.selection[i]];
            if (std::any_of(ex.detected.begin(), ex.detected.end(), [](int d) { return d >= 0; }))
                pb.tracks.push_back(static_cast<int>(i));
        }
        for (int j = 0; j < m; ++j)
            for (int i : pb.tracks)
                if (expansions[i][prior.selection[i]].detected[j] >= 0) {
                    pb.rows.push_back(j);
                    break;
                }

        const auto n_rows = static_cast<Eigen::Index>(pb.rows.size());
        const auto n_tracks = static_cast<Eigen::Index>(pb.tracks.size());
        pb.cost = Matrix::Constant(n_rows, n_tracks + n_rows, assignment::kForbidden);
        for (Eigen::Index r = 0; r < n_rows; ++r) {
            const int j = pb.rows[r];
            for (Eigen::Index t = 0; t < n_tracks; ++t) {
                const Expansion& ex = expansions[pb.tracks[t]][prior.selection[pb.tracks[t]]];
                if (ex.detected[j] < 0) continue;
                pb.cost(r, t) = -(ex.log_detect[j] - std::max(ex.log_miss, kImpossibleMissLogWeight));
            }
            if (std::isfinite(log_new[j])) pb.cost(r, n_tracks + r) = -log_new[j];
        }
        problems.push_back(std::move(pb));
    }

    // Split N_h over the priors in proportion to weight. Budget a prior cannot
    // use (its assignments run out) goes back to the priors that still have more,
    // so a budget covering every hypothesis enumerates all of them.
    const auto budget = static_cast<double>(cfg.max_globals);
    std::vector<std::size_t> open(problems.size());
    std::iota(open.begin(), open.end(), 0);
    double left = budget;
    while (left > 0.0 && !open.empty()) {
        double open_weight = 0.0;
        for (std::size_t p : open) open_weight += problems[p].prior->weight;
        std::vector<std::size_t> still_open;
        for (std::size_t p : open) {
            Problem& pb = problems[p];
            const double share = std::ceil(left * pb.prior->weight / open_weight);
            pb.k = static_cast<std::size_t>(std::min(budget, static_cast<double>(pb.k) + std::max(1.0, share)));
            pb.best = assignment::murty_kbest(pb.cost, pb.k);
            if (pb.best.size() == pb.k && static_cast<double>(pb.k) < budget) still_open.push_back(p);
        }
        double produced = 0.0;
        for (const auto& pb : problems) produced += static_cast<double>(pb.best.size());
        left = budget - produced;
        open = std::move(still_open);
    }

    std::vector<Candidate> candidates;
    for (const auto& pb : problems) {
        const auto n_rows = static_cast<Eigen::Index>(pb.rows.size());
        const auto n_tracks = static_cast<Eigen::Index>(pb.tracks.size());
        for (const auto& assoc : pb.best) {
            Candidate cand;
            cand.log_weight = std::log(pb.prior->weight);
            cand.selection.resize(n_old + static_cast<std::size_t>(m));
            std::vector<int> track_of_meas(m, -1);
            for (Eigen::Index r = 0; r < n_rows; ++r)
                if (assoc.row_to_col[r] < n_tracks) track_of_meas[pb.rows[r]] = pb.tracks[assoc.row_to_col[r]];

            std::vector<int> meas_of_track(n_old, -1);
            for (int j = 0; j < m; ++j)
                if (track_of_meas[j] >= 0) meas_of_track[track_of_meas[j]] = j;
            for (std::size_t i = 0; i < n_old; ++i) {
                const Expansion& ex = expansions[i][pb.prior->selection[i]];
                const int j = meas_of_track[i];
                if (j >= 0) {
                    cand.selection[i] = ex.detected[j];
                    cand.log_weight += ex.log_detect[j];
                } else {
                    cand.selection[i] = ex.missed;
                    cand.log_weight += ex.log_miss;
                }
            }
            for (int j = 0; j < m; ++j) {
                const bool new_target = track_of_meas[j] < 0 && !ignored[j];
                cand.selection[n_old + j] = new_target ? 1 : 0;
                if (new_target) cand.log_weight += log_new[j];
            }
            if (cand.log_weight > kNegInf) candidates.push_back(std::move(cand));
        }
    }
    if (candidates.empty()) throw NumericalError("pmbm::update: every global hypothesis has zero likelihood");

    // Normalize, keep the heaviest, renormalize.
    std::vector<double> lw(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) lw[c] = candidates[c].log_weight;
    const double norm = log_sum_exp(lw);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] > lw[b]; });
    double kept = 0.0;
    for (std::size_t c : order) {
        const double w = std::exp(lw[c] - norm);
        if (!out.globals.empty() &&
            (w < cfg.mbm_weight_floor || out.globals.size() >= static_cast<std::size_t>(cfg.max_globals)))
            break;
        out.globals.push_back({w, std::move(candidates[c].selection)});
        kept += w;
    }
    for (auto& g : out.globals) g.weight /= kept;

    out.ppp = pred.ppp;
    for (auto& c : out.ppp) c.weight *= 1.0 - pd;
    prune_ppp(out.ppp, cfg.ppp_weight_floor);

    cleanup(out, cfg.existence_floor);
    return out;
}

std::vector<Vector> estimate(const PmbmPosterior& post, const PruneConfig& cfg) {
    require(!post.globals.empty(), "pmbm::estimate: no global hypotheses");
    std::size_t best = 0;
    for (std::size_t a = 1; a < post.globals.size(); ++a)
        if (post.globals[a].weight > post.globals[best].weight) best = a;
    std::vector<Vector> out;
    const auto& sel = post.globals[best].selection;
    for (std::size_t i = 0; i < post.bernoullis.size(); ++i) {
        const auto& h = post.bernoullis[i].hypotheses[sel[i]];
        if (h.existence > cfg.estimate_threshold) out.push_back(h.density.mean);
    }
    return out;
}

PmbmPosterior pmb_project(const PmbmPosterior& post) {
    require(!post.globals.empty(), "pmbm::pmb_project: no global hypotheses");
    const bool already_pmb = post.globals.size() == 1 &&
                             std::all_of(post.bernoullis.begin(), post.bernoullis.end(),
                                         [](const BernoulliTree& t) { return t.hypotheses.size() == 1; });
    if (already_pmb) return post;

    std::size_t best = 0;
    for (std::size_t a = 1; a < post.globals.size(); ++a)
        if (post.globals[a].weight > post.globals[best].weight) best = a;

    PmbmPosterior out;
    out.ppp = post.ppp;
    out.scans = post.scans;
    out.globals = {GlobalHypothesis{1.0, {}}};
    for (std::size_t i = 0; i < post.bernoullis.size(); ++i) {
        const auto& hyps = post.bernoullis[i].hypotheses;
        std::vector<double> mass(hyps.size(), 0.0);
        for (const auto& g : post.globals) mass[g.selection[i]] += g.weight * hyps[g.selection[i]].existence;
        const double r = std::accumulate(mass.begin(), mass.end(), 0.0);
        if (r <= 0.0) continue;

        std::vector<double> w;
        std::vector<Gaussian> comps;
        for (std::size_t a = 0; a < hyps.size(); ++a)
            if (mass[a] > 0.0) {
                w.push_back(mass[a]);
                comps.push_back(hyps[a].density);
            }
        LocalHypothesis merged;
        merged.log_weight = 0.0;
        merged.existence = std::min(r, 1.0);
        merged.density = comps.size() == 1 ? comps.front() : moment_match(w, comps);
        merged.history = hyps[post.globals[best].selection[i]].history;
        out.globals.front().selection.push_back(0);
        out.bernoullis.push_back({{std::move(merged)}});
    }
    return out;
}

std::pair<double, double> undetected_recursion(double prev_updated, const BirthDeathParams& params, double dt,
                                               double p_detect) {
    require(prev_updated >= 0.0, "undetected_recursion: negative expected count");
    require(p_detect >= 0.0 && p_detect <= 1.0, "undetected_recursion: detection probability outside [0, 1]");
    const double predicted = survival_prob(params.mu_death, dt) * prev_updated + expected_births(params, dt);
    return {predicted, (1.0 - p_detect) * predicted};
}

std::pair<double, double> steady_state_lambda(const BirthDeathParams& params, double dt, double p_detect) {
    require(p_detect >= 0.0 && p_detect <= 1.0, "steady_state_lambda: detection probability outside [0, 1]");
    const double ps = survival_prob(params.mu_death, dt);
    const double denom = 1.0 - ps + ps * p_detect;
    if (!(denom > 0.0)) throw NotApplicable("steady_state_lambda: no steady state for p_S = 1 and p_D = 0");
    const double predicted = expected_births(params, dt) / denom;
    return {predicted, (1.0 - p_detect) * predicted};
}

std::string dump(const PmbmPosterior& post) {
    std::ostringstream os;
    os.precision(10);
    const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, " ", " ", "", "", "[", "]");
    os << "scans " << post.scans << "\n";
    os << "ppp " << post.ppp.size() << "\n";
    for (const auto& c : post.ppp)
        os << "  w=" << c.weight << " mean=" << c.density.mean.transpose().format(row) << "\n";
    os << "bernoullis " << post.bernoullis.size() << "\n";
    for (std::size_t i = 0; i < post.bernoullis.size(); ++i) {
        os << "  bernoulli " << i << "\n";
        for (std::size_t a = 0; a < post.bernoullis[i].hypotheses.size(); ++a) {
            const auto& h = post.bernoullis[i].hypotheses[a];
            os << "    local " << a << " logw=" << h.log_weight << " r=" << h.existence
               << " mean=" << h.density.mean.transpose().format(row) << " cov=" << h.density.cov.format(row)
               << " history=";
            for (const auto& ref : h.history) os << "(" << ref.step << "," << ref.index << ")";
            os << "\n";
        }
    }
    os << "globals " << post.globals.size() << "\n";
    for (const auto& g : post.globals) {
        os << "  w=" << g.weight << " sel=";
        for (int s : g.selection) os << s << " ";
        os << "\n";
    }
    return os.str();
}

}  // namespace cdmtt::pmbm
