#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ivauctions/equilibrium.hpp"
#include "ivauctions/rng.hpp"

using namespace iva;

namespace {

ValuationModel private_values(int n, int steps, double hi = 1.0) {
  std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) W[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
  return ValuationModel::linear_weighted(W, {}, SignalSpace(0, hi, steps));
}

// column-dominant random weights: exactly single-crossing (c = 1)
ValuationModel random_sc_model(Rng& rng, int n, int steps) {
  std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
  for (int j = 0; j < n; ++j) {
    double diag = 0.5 + rng.u01();
    for (int i = 0; i < n; ++i)
      W[static_cast<size_t>(i)][static_cast<size_t>(j)] = i == j ? diag : rng.u01() * diag;
  }
  std::vector<double> offs(static_cast<size_t>(n));
  for (auto& o : offs) o = 0.1 + 0.3 * rng.u01();
  return ValuationModel::linear_weighted(W, offs, SignalSpace(0, 1, steps));
}

MechanismSpec gva() { return MechanismSpec::of(MechanismKind::gva); }

}  // namespace

TEST(Nob, SingleCoordinateWise) {
  SignalProfile s = SignalProfile::from_vector({1, 1, 1});
  EXPECT_TRUE(check_nob_single(s, s).pass);
  EXPECT_TRUE(check_nob_single(SignalProfile::from_vector({0, 1, 1}), s).pass);
  NobReport bad = check_nob_single(SignalProfile::from_vector({1.1, 1, 1}), s);
  EXPECT_FALSE(bad.pass);
  EXPECT_NEAR(bad.margin, -0.1, 1e-12);
  EXPECT_EQ(bad.worst_agent, 0);
}

TEST(Nob, MultiItemExpectationForm) {
  // additive two-item instance: an agent winning both items at truthful bids
  // violates multi-item NOB (sum of won-item values exceeds the max)
  std::vector<std::vector<double>> W = {{1.0, 0.2}, {0.2, 1.0}};
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 2), 2);
  SignalProfile s(2, 2, 1.0);
  Prior prior = Prior::point_mass(s);
  MechanismSpec mech = MechanismSpec::of(MechanismKind::sim_privatized_spa);

  StrategyProfile both = StrategyProfile::tabulate(mdl, [](int, const std::vector<double>& own) { return own; });
  NobReport bad = check_nob_multi(mech, mdl, both, prior);
  EXPECT_FALSE(bad.pass);  // agent 0 wins both items: 1.2 + 1.2 > 1.2

  // all-in on one item each: the expectation form holds with equality
  StrategyProfile diag = StrategyProfile::tabulate(mdl, [](int, const std::vector<double>& own) { return own; });
  for (int i = 0; i < 2; ++i)
    for (auto& e : const_cast<std::vector<StrategyTable::Entry>&>(diag.agents[static_cast<size_t>(i)].entries())) {
      e.participation.assign(2, 0);
      e.participation[static_cast<size_t>(i)] = 1;
    }
  NobReport good = check_nob_multi(mech, mdl, diag, prior);
  EXPECT_TRUE(good.pass) << good.margin;
}

TEST(BestResponse, VickreyTruthfulHasNoGain) {
  ValuationModel mdl = private_values(3, 10);
  SignalProfile s = SignalProfile::from_vector({0.5, 0.8, 0.2});
  BidProfile truthful{s};
  for (int i = 0; i < 3; ++i) {
    BestResponse br = best_response_gain(gva(), mdl, s, truthful, i, true);
    EXPECT_NEAR(br.gain, 0.0, 1e-12) << "agent " << i;
  }
}

TEST(BestResponse, LowerBoundCase1NoBeneficialDeviation) {
  ValuationModel mdl = ValuationModel::lower_bound_case1(100, 2, 0.01);
  SignalProfile s = SignalProfile::from_vector({1, 1, 1});
  BidProfile b{SignalProfile::from_vector({0, 1, 1})};
  for (int i = 0; i < 3; ++i) {
    BestResponse br = best_response_gain(gva(), mdl, s, b, i, true);
    EXPECT_NEAR(br.gain, 0.0, 1e-12) << "agent " << i;
  }
}

TEST(BestResponse, SineLosingAgentGainsAtLeastPiMinusOne) {
  ValuationModel mdl = ValuationModel::sine_pair(120);  // multiple of 3: 2*pi on grid
  double two_pi = 2 * std::numbers::pi;
  SignalProfile s = SignalProfile::from_vector({two_pi, two_pi});
  // agent 0 wins at (2pi, 2pi)? sin(4pi) = 0: tie -> agent 0. agent 1 loses.
  BidProfile b{SignalProfile::from_vector({two_pi, two_pi})};
  int winner = single_winner(mdl, b.bids);
  int loser = 1 - winner;
  BestResponse br = best_response_gain(gva(), mdl, s, b, loser, true);
  double grid_err = 8.0 * mdl.space(loser).step_size();
  EXPECT_GE(br.gain, std::numbers::pi - 1.0 - grid_err);
  EXPECT_GE(br.gain, 0.5);
}

TEST(Verify, PneOnCase1AndCase2) {
  {
    ValuationModel mdl = ValuationModel::lower_bound_case1(100, 2, 0.01);
    VerifyContext ctx;
    ctx.mode = EqMode::pne;
    ctx.at = SignalProfile::from_vector({1, 1, 1});
    StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0, 1, 1});
    EquilibriumReport rep = verify(gva(), mdl, sigma, ctx, 1e-9, true);
    EXPECT_TRUE(rep.pass) << "gain " << rep.worst.gain;
    EXPECT_TRUE(rep.nob_checked);
    EXPECT_TRUE(rep.nob_pass);
    EXPECT_DOUBLE_EQ(rep.nob_margin, 0.0);  // two agents bid exactly their signal
  }
  {
    ValuationModel mdl = ValuationModel::lower_bound_case2(100, 3, 0.01);
    VerifyContext ctx;
    ctx.mode = EqMode::pne;
    ctx.at = SignalProfile::from_vector({1, 1, 1});
    StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0, 1, 1});
    EquilibriumReport rep = verify(gva(), mdl, sigma, ctx, 1e-9, true);
    EXPECT_TRUE(rep.pass) << "gain " << rep.worst.gain;
    EquilibriumReport rep2 = verify(MechanismSpec::of(MechanismKind::second_price), mdl, sigma, ctx, 1e-9, true);
    EXPECT_TRUE(rep2.pass) << "gain " << rep2.worst.gain;
  }
}

TEST(Verify, BadExample1IsEpe) {
  int n = 8;
  ValuationModel mdl = ValuationModel::bad_example1(n, 0.01, 16);
  StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>& own) {
    if (i <= 1) return std::vector<double>{1.0};
    (void)own;
    return std::vector<double>{0.0};
  });
  VerifyContext ctx;
  ctx.mode = EqMode::epe;
  ctx.epe_budget = 4000;
  EquilibriumReport rep = verify(gva(), mdl, sigma, ctx, 1e-9, true);
  EXPECT_TRUE(rep.pass) << "agent " << rep.worst.agent << " gain " << rep.worst.gain;
}

TEST(Verify, BadExample2IsEpe) {
  int n = 9;
  ValuationModel mdl = ValuationModel::bad_example2(n, 0.01, 12);
  StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>& own) {
    if (i <= 1) return own;  // truthful
    return std::vector<double>{0.0};
  });
  VerifyContext ctx;
  ctx.mode = EqMode::epe;
  ctx.epe_budget = 4000;
  EquilibriumReport rep = verify(gva(), mdl, sigma, ctx, 1e-9, true);
  EXPECT_TRUE(rep.pass) << "agent " << rep.worst.agent << " gain " << rep.worst.gain;
}

TEST(Verify, HierarchyEpeImpliesPneImpliesBne) {
  int n = 5;
  ValuationModel mdl = ValuationModel::bad_example1(n, 0.01, 6);
  StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>&) {
    return std::vector<double>{i <= 1 ? 1.0 : 0.0};
  });
  VerifyContext epe_ctx;
  epe_ctx.mode = EqMode::epe;
  epe_ctx.epe_budget = 3000;
  ASSERT_TRUE(verify(gva(), mdl, sigma, epe_ctx, 1e-9, true).pass);

  // PNE at every grid profile of the free agents (sampled corners + mids)
  for (double x : {0.0, 0.5, 1.0})
    for (double y : {0.0, 1.0}) {
      SignalProfile s(n, 1, x);
      s.at(0) = 1;
      s.at(1) = 1;
      s.at(2) = y;
      VerifyContext pne_ctx;
      pne_ctx.mode = EqMode::pne;
      pne_ctx.at = s;
      EXPECT_TRUE(verify(gva(), mdl, sigma, pne_ctx, 1e-9, true).pass);
      VerifyContext bne_ctx;
      bne_ctx.mode = EqMode::bne;
      bne_ctx.prior = Prior::point_mass(s);
      EXPECT_TRUE(verify(gva(), mdl, sigma, bne_ctx, 1e-9, true).pass);
    }
}

TEST(Verify, TruthfulIsBneForGvaUnderScAndNob) {
  Rng rng(97);
  for (int trial = 0; trial < 6; ++trial) {
    ValuationModel mdl = random_sc_model(rng, 3, 4);
    StrategyProfile sigma = StrategyProfile::truthful(mdl);
    // independent uniform prior over a coarse grid
    std::vector<std::vector<std::vector<std::pair<double, double>>>> marg(3);
    for (int i = 0; i < 3; ++i) {
      marg[static_cast<size_t>(i)].resize(1);
      for (int k = 0; k <= 4; k += 2)
        marg[static_cast<size_t>(i)][0].emplace_back(mdl.space(i).point(k), 1.0 / 3.0);
    }
    VerifyContext ctx;
    ctx.mode = EqMode::bne;
    ctx.prior = Prior::product(3, 1, marg);
    EquilibriumReport rep = verify(gva(), mdl, sigma, ctx, 1e-9, true);
    EXPECT_TRUE(rep.pass) << "trial " << trial << " gain " << rep.worst.gain;
  }
}

TEST(Verify, RejectsUncoveredStrategyTable) {
  ValuationModel mdl = private_values(2, 4);
  StrategyProfile sigma;
  sigma.agents.resize(2);  // empty tables
  VerifyContext ctx;
  ctx.mode = EqMode::pne;
  ctx.at = SignalProfile::from_vector({0.5, 0.5});
  EXPECT_THROW(verify(gva(), mdl, sigma, ctx, 1e-9, true), std::invalid_argument);
}

TEST(Smoothness, Case2DirectEvaluation) {
  ValuationModel mdl = ValuationModel::lower_bound_case2(100, 3, 0.01);
  SignalProfile s = SignalProfile::from_vector({1, 1, 1});
  BidProfile b{SignalProfile::from_vector({0, 1, 1})};
  double slack = 0;
  EXPECT_TRUE(check_smoothness_single(mdl, 3.0, 1.0, s, b, 1e-9, &slack));
  // i = argmax v(s) = agent 2 (300.01); w(b) = agent 1; u_i = 0
  EXPECT_NEAR(slack, 3.0 * 101.0 - 300.01, 1e-9);
}

TEST(Smoothness, TruthfulBidsTrivial) {
  ValuationModel mdl = ValuationModel::wallet_game(3, SignalSpace(0, 1, 8));
  SignalProfile s = SignalProfile::from_vector({0.5, 0.75, 1.0});
  BidProfile b{s};
  EXPECT_TRUE(check_smoothness_single(mdl, 1.0, 1.0, s, b));
}

TEST(Smoothness, RandomScInstances) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    ValuationModel mdl = random_sc_model(rng, 2 + rng.below(3), 6);
    int n = mdl.agents();
    SignalProfile s(n, 1);
    SignalProfile bids(n, 1);
    for (int i = 0; i < n; ++i) {
      int si = rng.below(7);
      s.at(i) = mdl.space(i).point(si);
      bids.at(i) = mdl.space(i).point(rng.below(si + 1));
    }
    double gamma = *mdl.declared_gamma();
    double c = *mdl.declared_c();
    double slack = 0;
    EXPECT_TRUE(check_smoothness_single(mdl, gamma, c, s, BidProfile{bids}, 1e-7, &slack))
        << "trial " << trial << " slack " << slack;
  }
}

TEST(AllIn, SelfWinnerBranch) {
  std::vector<std::vector<double>> W = {{1.0, 0.3}, {0.3, 1.0}};
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4), 2);
  SignalProfile s(2, 2, 1.0);
  SignalProfile bids(2, 2, 0.5);
  BidProfile bp{bids};
  AllInCheck chk = check_allin_lemma(mdl, *mdl.declared_gamma(), *mdl.declared_c(), s, bp, 0, 0);
  EXPECT_TRUE(chk.bound_self);
  EXPECT_TRUE(chk.bound_other);
}

TEST(AllIn, NoParticipantsBranch) {
  std::vector<std::vector<double>> W = {{1.0, 0.3}, {0.3, 1.0}};
  ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4), 2);
  SignalProfile s(2, 2, 1.0);
  SignalProfile bids(2, 2, 0.5);
  std::vector<uint8_t> nobody(4, 0);
  BidProfile bp{bids, nobody};
  AllInCheck chk = check_allin_lemma(mdl, 1.0, 1.0, s, bp, 0, 1);
  EXPECT_TRUE(chk.bound_self);
  EXPECT_TRUE(chk.bound_other);
  // all-in wins alone and pays zero: utility equals the item value
  EXPECT_NEAR(chk.all_in_utility, mdl.item_value(0, 1, ColumnView(s, 1)), 1e-12);
}

TEST(AllIn, RandomSubmodularLinearInstances) {
  Rng rng(23);
  for (int trial = 0; trial < 400; ++trial) {
    int n = 2 + rng.below(4), m = 2 + rng.below(4);
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (auto& row : W)
      for (auto& x : row) x = 0.05 + rng.u01();
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 3), m);
    double gamma = std::min(*mdl.declared_gamma(), 50.0);
    double c = std::min(*mdl.declared_c(), 50.0);
    SignalProfile s(n, m);
    SignalProfile bids(n, m);
    std::vector<uint8_t> part(static_cast<size_t>(n * m));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l) {
        int si = rng.below(4);
        s.at(i, l) = mdl.space(i, l).point(si);
        bids.at(i, l) = mdl.space(i, l).point(rng.below(si + 1));
        part[static_cast<size_t>(i * m + l)] = rng.bernoulli(0.75) ? 1 : 0;
      }
    BidProfile bp{bids, part};
    int agent = rng.below(n), item = rng.below(m);
    AllInCheck chk = check_allin_lemma(mdl, gamma, c, s, bp, agent, item, 1e-7);
    EXPECT_TRUE(chk.bound_self) << "trial " << trial << " slack " << chk.slack_self;
    EXPECT_TRUE(chk.bound_other) << "trial " << trial << " slack " << chk.slack_other;
  }
}

TEST(ScanPne, SineHasNoPureEquilibriumAtCoarseResolution) {
  ValuationModel mdl = ValuationModel::sine_pair(120);
  double two_pi = 2 * std::numbers::pi;
  SignalProfile s = SignalProfile::from_vector({two_pi, two_pi});
  PneScanResult res = scan_nob_pne(gva(), mdl, s, 0.5);
  EXPECT_FALSE(res.found);
  EXPECT_GE(res.min_max_gain, 0.5);
  EXPECT_EQ(res.profiles_checked, 81u * 81u);
}

TEST(ScanPne, MixtureHasTruthfulAsUniqueNobPne) {
  ValuationModel mdl = private_values(2, 8);
  SignalProfile s = SignalProfile::from_vector({1.0, 0.75});
  MechanismSpec mix = MechanismSpec::mixture_of(MechanismKind::gva, 0.1);
  PneScanResult res = scan_nob_pne(mix, mdl, s, 1e-12);
  ASSERT_TRUE(res.found);
  ASSERT_EQ(res.equilibria.size(), 1u);
  EXPECT_EQ(res.equilibria[0].data, s.data);
}

TEST(ScanPne, FindsVickreyEquilibria) {
  ValuationModel mdl = private_values(2, 4);
  SignalProfile s = SignalProfile::from_vector({1.0, 0.5});
  PneScanResult res = scan_nob_pne(gva(), mdl, s, 1e-9);
  EXPECT_TRUE(res.found);
  bool truthful_found = false;
  for (const auto& b : res.equilibria) truthful_found = truthful_found || b.data == s.data;
  EXPECT_TRUE(truthful_found);
}

TEST(Dsic, GvaUnderNobExhaustiveSmall) {
  Rng rng(5);
  ValuationModel mdl = random_sc_model(rng, 3, 5);
  // precompute outcomes per bid profile
  int pts = 6;
  auto idx_of = [&](const std::vector<int>& v) { return (v[0] * pts + v[1]) * pts + v[2]; };
  std::vector<int> winner(static_cast<size_t>(pts * pts * pts));
  std::vector<double> pay(static_cast<size_t>(pts * pts * pts));
  GridOdometer odo({pts, pts, pts});
  do {
    SignalProfile b(3, 1);
    for (int i = 0; i < 3; ++i) b.at(i) = mdl.space(i).point(odo.idx[static_cast<size_t>(i)]);
    Outcome o = run_single(MechanismKind::gva, mdl, BidProfile{b});
    winner[static_cast<size_t>(idx_of(odo.idx))] = *o.winners[0];
    pay[static_cast<size_t>(idx_of(odo.idx))] = o.payments[static_cast<size_t>(*o.winners[0])];
  } while (odo.next());

  uint64_t violations = 0;
  GridOdometer so({pts, pts, pts});
  do {
    SignalProfile s(3, 1);
    for (int i = 0; i < 3; ++i) s.at(i) = mdl.space(i).point(so.idx[static_cast<size_t>(i)]);
    std::vector<double> vs(3);
    for (int i = 0; i < 3; ++i) vs[static_cast<size_t>(i)] = mdl.value(i, s);
    std::vector<int> b(3, 0);
    std::function<void(int)> rec = [&](int d) {
      if (d == 3) {
        for (int i = 0; i < 3; ++i) {
          int bf = idx_of(b);
          std::vector<int> tb = b;
          tb[static_cast<size_t>(i)] = so.idx[static_cast<size_t>(i)];
          int tf = idx_of(tb);
          double u_b = winner[static_cast<size_t>(bf)] == i ? vs[static_cast<size_t>(i)] - pay[static_cast<size_t>(bf)] : 0.0;
          double u_t = winner[static_cast<size_t>(tf)] == i ? vs[static_cast<size_t>(i)] - pay[static_cast<size_t>(tf)] : 0.0;
          if (u_t < u_b - 1e-9) ++violations;
        }
        return;
      }
      for (int k = 0; k <= so.idx[static_cast<size_t>(d)]; ++k) {
        b[static_cast<size_t>(d)] = k;
        rec(d + 1);
      }
    };
    rec(0);
  } while (so.next());
  EXPECT_EQ(violations, 0u);
}
