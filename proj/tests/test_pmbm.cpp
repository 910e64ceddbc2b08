#include "cdmtt/pmbm.hpp"

#include "cdmtt/birth.hpp"
#include "oracles.hpp"
#include "pmbm_oracle.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <numeric>

using namespace cdmtt;
using namespace cdmtt::pmbm;

namespace {

LinearSde example1_sde() {
    LinearSde sde;
    sde.a.resize(2, 2);
    sde.a << 0, 1, 0, -0.2;
    sde.u.resize(2);
    sde.u << 0, 2;
    sde.l.resize(2, 1);
    sde.l << 0, 1;
    sde.q_beta = Matrix::Identity(1, 1);
    return sde;
}

MeasurementModel scalar_sensor(double pd = 0.9, double clutter = 2.0) {
    MeasurementModel mm;
    mm.h = Matrix::Zero(1, 2);
    mm.h(0, 0) = 1.0;
    mm.r = Matrix::Identity(1, 1);
    mm.p_detect = pd;
    mm.clutter_rate = clutter;
    mm.clutter_region.lower = Vector::Constant(1, -50.0);
    mm.clutter_region.upper = Vector::Constant(1, 50.0);
    return mm;
}

LocalHypothesis local(double r, double mean0, double var = 1.0) {
    LocalHypothesis h;
    h.existence = r;
    h.density = {Eigen::Vector2d(mean0, 0.0), Matrix::Identity(2, 2) * var};
    return h;
}

PmbmPosterior with_tracks(std::initializer_list<LocalHypothesis> tracks) {
    PmbmPosterior post;
    post.globals = {GlobalHypothesis{1.0, {}}};
    for (const auto& h : tracks) {
        post.bernoullis.push_back({{h}});
        post.globals[0].selection.push_back(0);
    }
    return post;
}

DiscretizedTransition identity_transition() {
    DiscretizedTransition tr;
    tr.f = Matrix::Identity(2, 2);
    tr.b = Vector::Zero(2);
    tr.q = Matrix::Zero(2, 2);
    tr.p_survival = 1.0;
    tr.dt = 1.0;
    return tr;
}

/// Global weights of every association map for 2 tracks x 2 measurements.
double brute_force_global(const PmbmPosterior& pred, const std::vector<Vector>& meas, const MeasurementModel& mm,
                          const std::vector<int>& assoc) {
    // assoc[j] = track index, or -1 for a new Bernoulli
    double w = 1.0;
    for (std::size_t i = 0; i < pred.bernoullis.size(); ++i) {
        const auto& h = pred.bernoullis[i].hypotheses[0];
        const auto it = std::find(assoc.begin(), assoc.end(), static_cast<int>(i));
        if (it == assoc.end()) {
            w *= 1.0 - h.existence * mm.p_detect;
        } else {
            const Vector& z = meas[it - assoc.begin()];
            const Matrix s = mm.h * h.density.cov * mm.h.transpose() + mm.r;
            w *= h.existence * mm.p_detect * oracle::pmbm::normal_pdf(z, mm.h * h.density.mean, s);
        }
    }
    for (std::size_t j = 0; j < meas.size(); ++j)
        if (assoc[j] < 0) w *= mm.clutter_intensity(meas[j]);
    return w;
}

}  // namespace

TEST(PruneConfig, Validation) {
    PruneConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.estimate_threshold = 1.0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.max_globals = 0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Predict, EmptyPosteriorGetsBirthComponent) {
    PmbmPosterior post;
    birth::BirthPpp b{0.0796, {Eigen::Vector2d(1, 2), Matrix::Identity(2, 2)}};
    const auto out = predict(post, discretize(example1_sde(), 1.0, 0.01), b);
    ASSERT_EQ(out.ppp.size(), 1u);
    EXPECT_EQ(out.ppp[0].weight, 0.0796);
    EXPECT_EQ(out.ppp[0].density.mean, b.density.mean);
    EXPECT_TRUE(out.bernoullis.empty());
}

TEST(Predict, IdentityDynamicsLeavesPosteriorUnchanged) {
    auto post = with_tracks({local(0.7, 3.0)});
    post.ppp.push_back({0.2, {Eigen::Vector2d(1, 1), Matrix::Identity(2, 2)}});
    const auto out = predict(post, identity_transition(), {});
    EXPECT_EQ(out.ppp[0].weight, 0.2);
    EXPECT_EQ(out.ppp[0].density.cov, post.ppp[0].density.cov);
    EXPECT_EQ(out.bernoullis[0].hypotheses[0].existence, 0.7);
    EXPECT_EQ(out.bernoullis[0].hypotheses[0].density.mean, post.bernoullis[0].hypotheses[0].density.mean);
}

TEST(Predict, ExistenceDecaysWithSurvival) {
    const auto out = predict(with_tracks({local(0.8, 0.0)}), discretize(example1_sde(), 1.0, 0.01), {});
    EXPECT_NEAR(out.bernoullis[0].hypotheses[0].existence, 0.79204, 5e-6);
}

TEST(Predict, BernoulliOffsetSwitch) {
    const auto tr = discretize(example1_sde(), 1.0, 0.01);
    const auto post = with_tracks({local(0.8, 0.0)});
    const Vector m0 = post.bernoullis[0].hypotheses[0].density.mean;
    const auto with = predict(post, tr, {}, true);
    const auto without = predict(post, tr, {}, false);
    EXPECT_LT((with.bernoullis[0].hypotheses[0].density.mean - (tr.f * m0 + tr.b)).norm(), 1e-14);
    EXPECT_LT((without.bernoullis[0].hypotheses[0].density.mean - tr.f * m0).norm(), 1e-14);
}

TEST(Update, NoMeasurementsKeepsMissedHypothesesOnly) {
    auto pred = with_tracks({local(0.5, 0.0)});
    pred.ppp.push_back({1.0, {Eigen::Vector2d(0, 0), Matrix::Identity(2, 2)}});
    const auto out = update(pred, {}, scalar_sensor(), PruneConfig{});
    ASSERT_EQ(out.bernoullis.size(), 1u);
    ASSERT_EQ(out.bernoullis[0].hypotheses.size(), 1u);
    EXPECT_NEAR(out.bernoullis[0].hypotheses[0].existence, 0.05 / 0.55, 1e-15);
    EXPECT_NEAR(out.ppp[0].weight, 0.1, 1e-15);
    EXPECT_NO_THROW(out.validate());
}

TEST(Update, ForcedAssociation) {
    const auto mm = scalar_sensor(1.0, 0.0);
    auto pred = with_tracks({local(0.6, 1.0, 2.0)});
    const std::vector<Vector> z{Vector::Constant(1, 1.5)};
    const auto out = update(pred, z, mm, PruneConfig{});
    ASSERT_EQ(out.globals.size(), 1u);
    const auto& h = out.bernoullis[0].hypotheses[out.globals[0].selection[0]];
    EXPECT_EQ(h.existence, 1.0);
    const double s = 2.0 + 1.0;
    const double want = std::log(0.6 * std::exp(-0.125 / s) / std::sqrt(2 * std::numbers::pi * s));
    EXPECT_NEAR(h.log_weight, want, 1e-12);
    EXPECT_NEAR(h.density.mean(0), 1.0 + 2.0 / 3.0 * 0.5, 1e-12);
}

TEST(Update, GlobalWeightsMatchBruteForce) {
    const auto mm = scalar_sensor(0.9, 2.0);
    const auto pred = with_tracks({local(0.9, 0.0), local(0.6, 2.0, 3.0)});
    const std::vector<Vector> z{Vector::Constant(1, 0.4), Vector::Constant(1, 1.7)};
    PruneConfig cfg = oracle::pmbm::exhaustive_config();
    const auto out = update(pred, z, mm, cfg);

    // With an empty PPP the new Bernoullis never exist, so each global is an
    // association map of measurements to tracks or clutter.
    std::vector<std::vector<int>> maps;
    for (int a = -1; a < 2; ++a)
        for (int b = -1; b < 2; ++b)
            if (a < 0 || a != b) maps.push_back({a, b});
    std::vector<double> want;
    for (const auto& m : maps) want.push_back(brute_force_global(pred, z, mm, m));
    const double total = std::accumulate(want.begin(), want.end(), 0.0);
    for (auto& w : want) w /= total;

    ASSERT_EQ(out.globals.size(), maps.size());
    for (const auto& g : out.globals) {
        std::vector<int> assoc{-1, -1};
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& h = out.bernoullis[i].hypotheses[g.selection[i]];
            if (!h.history.empty()) assoc[h.history.back().index] = static_cast<int>(i);
        }
        const auto it = std::find(maps.begin(), maps.end(), assoc);
        ASSERT_NE(it, maps.end());
        EXPECT_NEAR(g.weight, want[it - maps.begin()], 1e-10);
    }
    EXPECT_NO_THROW(out.validate());
}

TEST(Update, MatchesExhaustiveRecursionOverThreeScans) {
    const auto sde = example1_sde();
    const auto mm = scalar_sensor(0.9, 2.0);
    BirthDeathParams bp;
    bp.lambda_appear = 1.5;
    bp.mu_death = 0.1;
    bp.mean_appear = Eigen::Vector2d(0.0, 1.0);
    bp.cov_appear = Vector(Eigen::Vector2d(40.0, 1.0)).asDiagonal();
    const std::vector<double> dts{0.7, 1.3, 0.4};
    const std::vector<std::vector<double>> scans{{0.5, 8.0}, {1.4, 9.5, -12.0}, {2.1, 10.2, -11.0}};

    PmbmPosterior lib;
    oracle::pmbm::Posterior ref;
    const auto cfg = oracle::pmbm::exhaustive_config();
    for (std::size_t k = 0; k < dts.size(); ++k) {
        const auto tr = discretize(sde, dts[k], bp.mu_death);
        const Gaussian bd = birth::birth_moments_linear(sde, bp, dts[k]);
        const double bw = expected_births(bp, dts[k]);
        std::vector<Vector> z;
        for (double v : scans[k]) z.push_back(Vector::Constant(1, v));
        lib = update(predict(std::move(lib), tr, {bw, bd}), z, mm, cfg);
        ref = oracle::pmbm::update(oracle::pmbm::predict(ref, tr, bw, bd), z, mm);
        EXPECT_LT(oracle::pmbm::discrepancy(oracle::pmbm::flatten(lib), ref.globals), 1e-9) << "scan " << k;
        EXPECT_LT(oracle::pmbm::ppp_discrepancy(lib, ref), 1e-9) << "scan " << k;
    }
    EXPECT_GT(ref.globals.size(), 20u);
}

TEST(Update, PermutationOfMeasurementsLeavesEstimatesUnchanged) {
    const auto mm = scalar_sensor(0.9, 2.0);
    auto pred = with_tracks({local(0.9, 0.0), local(0.8, 5.0)});
    pred.ppp.push_back({0.5, {Eigen::Vector2d(10, 0), Matrix::Identity(2, 2) * 4}});
    std::vector<Vector> z{Vector::Constant(1, 0.3), Vector::Constant(1, 5.2), Vector::Constant(1, 10.5)};
    const auto a = estimate(update(pred, z, mm, PruneConfig{}), PruneConfig{});
    std::swap(z[0], z[2]);
    const auto b = estimate(update(pred, z, mm, PruneConfig{}), PruneConfig{});
    ASSERT_EQ(a.size(), b.size());
    auto key = [](const std::vector<Vector>& v) {
        std::vector<double> out;
        for (const auto& x : v) out.push_back(x(0));
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto ka = key(a), kb = key(b);
    for (std::size_t i = 0; i < ka.size(); ++i) EXPECT_NEAR(ka[i], kb[i], 1e-12);
}

TEST(Update, RejectsBadMeasurement) {
    const auto pred = with_tracks({local(0.5, 0.0)});
    EXPECT_THROW(update(pred, {Vector::Zero(2)}, scalar_sensor(), PruneConfig{}), InvalidInput);
}

TEST(Estimate, Thresholds) {
    const PruneConfig cfg;
    EXPECT_TRUE(estimate(with_tracks({local(0.3, 1.0), local(0.39, 2.0)}), cfg).empty());
    const auto one = estimate(with_tracks({local(1.0, 4.0)}), cfg);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0](0), 4.0);
}

TEST(Estimate, TieBreaksByLowestIndex) {
    PmbmPosterior post;
    post.bernoullis.push_back({{local(1.0, 1.0), local(1.0, 2.0)}});
    post.globals = {GlobalHypothesis{0.5, {1}}, GlobalHypothesis{0.5, {0}}};
    const auto est = estimate(post, PruneConfig{});
    ASSERT_EQ(est.size(), 1u);
    EXPECT_EQ(est[0](0), 2.0);
}

TEST(PmbProject, PmbIsUnchanged) {
    const auto post = with_tracks({local(0.4, 1.0), local(0.9, -3.0)});
    const auto out = pmb_project(post);
    ASSERT_EQ(out.bernoullis.size(), 2u);
    EXPECT_EQ(out.bernoullis[1].hypotheses[0].existence, 0.9);
    EXPECT_EQ(out.bernoullis[1].hypotheses[0].density.mean, post.bernoullis[1].hypotheses[0].density.mean);
}

TEST(PmbProject, SymmetricTwoComponentMerge) {
    PmbmPosterior post;
    post.bernoullis.push_back({{local(1.0, 1.0), local(1.0, 3.0)}});
    post.globals = {GlobalHypothesis{0.5, {0}}, GlobalHypothesis{0.5, {1}}};
    const auto out = pmb_project(post);
    ASSERT_EQ(out.globals.size(), 1u);
    const auto& h = out.bernoullis[0].hypotheses[0];
    EXPECT_DOUBLE_EQ(h.existence, 1.0);
    EXPECT_DOUBLE_EQ(h.density.mean(0), 2.0);
    EXPECT_DOUBLE_EQ(h.density.cov(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(h.density.cov(1, 1), 1.0);
}

TEST(PmbProject, MarginalExistenceMatchesDirectSum) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    PmbmPosterior post;
    for (int i = 0; i < 3; ++i) {
        BernoulliTree t;
        for (int a = 0; a < 3; ++a) t.hypotheses.push_back(local(ud(rng), 10 * ud(rng)));
        post.bernoullis.push_back(t);
    }
    post.globals.clear();
    double total = 0.0;
    for (int g = 0; g < 5; ++g) {
        GlobalHypothesis gh;
        gh.weight = ud(rng);
        total += gh.weight;
        for (int i = 0; i < 3; ++i) gh.selection.push_back(static_cast<int>(rng() % 3));
        post.globals.push_back(gh);
    }
    for (auto& g : post.globals) g.weight /= total;
    const auto out = pmb_project(post);
    ASSERT_EQ(out.bernoullis.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        double want = 0.0;
        for (const auto& g : post.globals) want += g.weight * post.bernoullis[i].hypotheses[g.selection[i]].existence;
        EXPECT_NEAR(out.bernoullis[i].hypotheses[0].existence, want, 1e-12);
    }
}

TEST(UndetectedRecursion, DirectEvaluation) {
    BirthDeathParams p;
    p.lambda_appear = 0.08;
    p.mu_death = 0.01;
    const auto [pred, upd] = undetected_recursion(0.0, p, 1.0, 0.9);
    EXPECT_NEAR(pred, 0.0796013, 5e-8);
    EXPECT_NEAR(upd, 0.0079601, 5e-8);
    EXPECT_EQ(undetected_recursion(3.0, p, 1.0, 1.0).second, 0.0);
}

TEST(UndetectedRecursion, ConvergesToSteadyState) {
    BirthDeathParams p;
    p.lambda_appear = 0.08;
    p.mu_death = 0.01;
    const auto [pinf, uinf] = steady_state_lambda(p, 1.0, 0.9);
    EXPECT_NEAR(pinf, 0.08835, 5e-6);
    EXPECT_NEAR(uinf, 0.008835, 5e-7);
    double lam = 0.0, predicted = 0.0;
    double prev_gap = std::abs(uinf);
    const double ratio = std::exp(-0.01) * 0.1;
    for (int k = 0; k < 200; ++k) {
        std::tie(predicted, lam) = undetected_recursion(lam, p, 1.0, 0.9);
        const double gap = std::abs(lam - uinf);
        if (k < 8 && prev_gap > 1e-15) EXPECT_NEAR(gap / prev_gap, ratio, 1e-6);
        prev_gap = gap;
    }
    EXPECT_NEAR(predicted, pinf, 1e-10);
    EXPECT_NEAR(lam, uinf, 1e-10);
}

TEST(UndetectedRecursion, LimitsOfDetection) {
    BirthDeathParams p;
    p.lambda_appear = 0.08;
    p.mu_death = 0.01;
    const double births = expected_births(p, 1.0);
    const auto full = steady_state_lambda(p, 1.0, 1.0);
    EXPECT_NEAR(full.first, births, 1e-15);
    EXPECT_EQ(full.second, 0.0);
    EXPECT_NEAR(steady_state_lambda(p, 1.0, 0.0).first, 8.0, 1e-9);
    double lam = 0.0;
    for (int k = 0; k < 5000; ++k) lam = undetected_recursion(lam, p, 1.0, 0.0).second;
    EXPECT_NEAR(lam, 8.0, 1e-6);
}

TEST(Lemma4, PppStaysSingleStationaryGaussian) {
    LinearSde sde;
    sde.a.resize(2, 2);
    sde.a << -0.1, 1, 0, -0.3;
    sde.u = Eigen::Vector2d(0.2, 0.1);
    sde.l = Matrix::Zero(2, 1);
    sde.l(1, 0) = 1.0;
    sde.q_beta = Matrix::Identity(1, 1) * 0.5;
    const Gaussian inf = birth::steady_state_moments(sde);
    BirthDeathParams bp;
    bp.lambda_appear = 0.5;
    bp.mu_death = 0.02;
    bp.mean_appear = inf.mean;
    bp.cov_appear = inf.cov;
    const auto mm = scalar_sensor(0.7, 1.0);

    PmbmPosterior post;
    double lam = 0.0;
    const std::vector<double> dts{0.5, 1.0, 2.0, 0.25, 1.5};
    for (std::size_t k = 0; k < dts.size(); ++k) {
        const auto tr = discretize(sde, dts[k], bp.mu_death);
        const birth::BirthPpp b{expected_births(bp, dts[k]), birth::birth_moments_linear(sde, bp, dts[k])};
        std::vector<Vector> z;
        if (k % 2) z.push_back(Vector::Constant(1, 0.3));
        post = update(predict(std::move(post), tr, b), z, mm, PruneConfig{});
        lam = undetected_recursion(lam, bp, dts[k], mm.p_detect).second;
        ASSERT_EQ(post.ppp.size(), 1u) << k;
        EXPECT_NEAR(post.ppp[0].weight, lam, 1e-9) << k;
        EXPECT_LT((post.ppp[0].density.mean - inf.mean).cwiseAbs().maxCoeff(), 1e-9) << k;
        EXPECT_LT((post.ppp[0].density.cov - inf.cov).cwiseAbs().maxCoeff(), 1e-9) << k;
    }
}

TEST(Dump, MentionsWeightsAndExistences) {
    const auto text = dump(with_tracks({local(0.25, 1.0)}));
    EXPECT_NE(text.find("0.25"), std::string::npos);
}
