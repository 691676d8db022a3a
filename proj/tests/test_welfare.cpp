#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ivauctions/rng.hpp"
#include "ivauctions/welfare.hpp"

using namespace iva;

TEST(Opt, SingleItemCases) {
  ValuationModel case2 = ValuationModel::lower_bound_case2(100, 3, 0.01);
  SignalProfile ones = SignalProfile::from_vector({1, 1, 1});
  EXPECT_DOUBLE_EQ(opt(case2, ones), 300.01);

  ValuationModel bad1 = ValuationModel::bad_example1(20, 0.01, 4);
  SignalProfile all1(20, 1, 1.0);
  EXPECT_DOUBLE_EQ(opt(bad1, all1), 20.01);
}

TEST(Opt, MultiItemMatchingAndTruncated) {
  ValuationModel far = ValuationModel::tilde_opt_far(10, 10, 0.1, 4);
  SignalProfile s(10, 10, 0.0);
  for (int l = 0; l < 10; ++l) s.at(0, l) = 1.0;
  // one item at s_1 = 1 for agent 0, nine items at (1-eps) for the others
  EXPECT_NEAR(opt(far, s), 1.0 + 9.0 * 0.9, 1e-9);
  EXPECT_NEAR(truncated_opt(far, s), 1.0, 1e-9);
}

TEST(Opt, TruncatedNeverExceedsOpt) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.below(3), m = 2 + rng.below(3);
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (auto& row : W)
      for (auto& x : row) x = rng.u01();
    for (int i = 0; i < n; ++i) W[static_cast<size_t>(i)][static_cast<size_t>(i)] += 0.2;
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4), m);
    SignalProfile s(n, m);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l) s.at(i, l) = mdl.space(i, l).point(rng.below(5));
    EXPECT_LE(truncated_opt(mdl, s), opt(mdl, s) + 1e-9);
  }
}

TEST(Decompose, PrivateValuesHaveZeroOther) {
  std::vector<std::vector<double>> W = {{1.0, 0.0}, {0.0, 1.0}};
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 2), 2);
  SignalProfile s(2, 2, 1.0);
  SelfOther so = decompose_self_other(mdl, Prior::point_mass(s));
  EXPECT_NEAR(so.other, 0.0, 1e-12);
  EXPECT_NEAR(so.self + so.other, so.truncated_opt, 1e-9);
}

TEST(Decompose, CommonTermModelHasNearZeroSelf) {
  // v_{il} = 1e-6 s_{il} + sum_{j != i} s_{jl}
  int n = 3;
  std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 1.0));
  for (int i = 0; i < n; ++i) W[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1e-6;
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 2), 3);
  SignalProfile s(n, 3, 1.0);
  SelfOther so = decompose_self_other(mdl, Prior::point_mass(s));
  EXPECT_LE(so.self, 1e-5);
  EXPECT_NEAR(so.self + so.other, so.truncated_opt, 1e-9);
}

TEST(Decompose, IdentityOverRandomPriors) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + rng.below(2), m = 2 + rng.below(2);
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (auto& row : W)
      for (auto& x : row) x = 0.05 + rng.u01();
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 2), m);
    Prior prior;
    double left = 1.0;
    for (int a = 0; a < 3; ++a) {
      SignalProfile s(n, m);
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < m; ++l) s.at(i, l) = mdl.space(i, l).point(rng.below(3));
      double p = a == 2 ? left : left * rng.u01();
      left -= a == 2 ? 0.0 : p;
      prior.atoms.emplace_back(std::move(s), p);
    }
    prior.validate();
    SelfOther so = decompose_self_other(mdl, prior);
    double topt = expected_truncated_opt(mdl, prior);
    EXPECT_NEAR(so.self + so.other, topt, 1e-6);
    EXPECT_NEAR(so.truncated_opt, topt, 1e-9);
  }
}

TEST(Asymmetry, TildeOptFarGrowsWithItems) {
  ValuationModel far = ValuationModel::tilde_opt_far(10, 10, 0.1, 4);
  SignalProfile s(10, 10, 0.0);
  for (int l = 0; l < 10; ++l) s.at(0, l) = 1.0;
  AsymmetryReport rep = asymmetry_d(far, Prior::point_mass(s));
  EXPECT_NEAR(rep.d, 1.0 + 9.0 * 0.9, 1e-9);  // m(1-eps) + eps
}

TEST(Asymmetry, InfiniteWhenTruncatedVanishes) {
  // only cross influences: truncation to zero while opt stays positive
  int n = 2;
  std::vector<std::vector<double>> W = {{1e-9, 1.0}, {1.0, 1e-9}};
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 2), 2);
  SignalProfile s(n, 2, 1.0);
  AsymmetryReport rep = asymmetry_d(mdl, Prior::point_mass(s));
  EXPECT_TRUE(std::isinf(rep.d) || rep.d > 1e6);
}

TEST(Covers, ProductCrossFootnoteFails) {
  ValuationModel pc = ValuationModel::product_cross();
  SignalProfile ones(3, 1, 1.0);
  double slack = 0;
  bool ok = check_covers_lemma(pc, 1.0, 1.0, ones, 0, 1, 0, 1e-9, &slack);
  EXPECT_FALSE(ok);
  EXPECT_NEAR(slack, -1.0, 1e-12);  // LHS 0, RHS 1
}

TEST(Covers, RandomSubmodularLinearInstances) {
  Rng rng(29);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 2 + rng.below(4);
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (auto& row : W)
      for (auto& x : row) x = 0.05 + rng.u01();
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4), 2);
    double gamma = std::min(*mdl.declared_gamma(), 100.0);
    double c = std::min(*mdl.declared_c(), 100.0);
    SignalProfile s(n, 2);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < 2; ++l) s.at(i, l) = mdl.space(i, l).point(rng.below(5));
    int i = rng.below(n), j = rng.below(n);
    double slack = 0;
    EXPECT_TRUE(check_covers_lemma(mdl, gamma, c, s, i, j, rng.below(2), 1e-7, &slack))
        << "trial " << trial << " slack " << slack;
  }
}

TEST(PoaReport, Case1RatioApproachesC) {
  ValuationModel mdl = ValuationModel::lower_bound_case1(100, 2, 0.01);
  StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0, 1, 1});
  VerifyContext ctx;
  ctx.mode = EqMode::pne;
  ctx.at = SignalProfile::from_vector({1, 1, 1});
  WelfareReport rep = poa_report(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true);
  EXPECT_NEAR(rep.poa_ratio, 200.01 / 101.0, 1e-9);
}

TEST(PoaReport, Case2RatioApproachesGamma) {
  ValuationModel mdl = ValuationModel::lower_bound_case2(100, 3, 0.01);
  StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0, 1, 1});
  VerifyContext ctx;
  ctx.mode = EqMode::pne;
  ctx.at = SignalProfile::from_vector({1, 1, 1});
  WelfareReport rep = poa_report(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true);
  EXPECT_NEAR(rep.poa_ratio, 300.01 / 101.0, 1e-9);
}

TEST(PoaReport, RefusesNonEquilibrium) {
  ValuationModel mdl = ValuationModel::lower_bound_case2(100, 3, 0.01);
  // everyone bids zero: agent 1 would deviate to win cheaply
  StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0, 0, 0});
  VerifyContext ctx;
  ctx.mode = EqMode::pne;
  ctx.at = SignalProfile::from_vector({1, 1, 1});
  EXPECT_THROW(poa_report(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true),
               std::runtime_error);
}

TEST(PoaReport, GammaBoundClaimAtPriorAtoms) {
  // for a certified BNE under SC + NOB: gamma_hat * v_winner(s) >= max_i v_i(s)
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 3;
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (int j = 0; j < n; ++j) {
      double diag = 0.5 + rng.u01();
      for (int i = 0; i < n; ++i)
        W[static_cast<size_t>(i)][static_cast<size_t>(j)] = i == j ? diag : 0.05 + rng.u01() * diag;
    }
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4));
    StrategyProfile sigma = StrategyProfile::truthful(mdl);
    SignalProfile s(n, 1);
    for (int i = 0; i < n; ++i) s.at(i) = mdl.space(i).point(rng.below(5));
    VerifyContext ctx;
    ctx.mode = EqMode::bne;
    ctx.prior = Prior::point_mass(s);
    EquilibriumReport ver = verify(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true);
    ASSERT_TRUE(ver.pass);
    int w = single_winner(mdl, sigma.apply(mdl, s).bids);
    double gamma = *mdl.declared_gamma();
    double vmax = 0;
    for (int i = 0; i < n; ++i) vmax = std::max(vmax, mdl.value(i, s));
    EXPECT_GE(gamma * mdl.value(w, s) + 1e-9, vmax) << "trial " << trial;
  }
}
