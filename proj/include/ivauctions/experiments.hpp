#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivauctions/equilibrium.hpp"
#include "ivauctions/matching.hpp"
#include "ivauctions/mechanisms.hpp"
#include "ivauctions/properties.hpp"
#include "ivauctions/rng.hpp"
#include "ivauctions/strategy.hpp"
#include "ivauctions/valuation.hpp"
#include "ivauctions/welfare.hpp"

namespace iva {

/// One measured quantity with its comparison target.
struct Measurement {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  std::string cmp;  // ">=", "<=", "near" (absolute tol), "eq" (exact within tol)
  double tol = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string name;
  std::map<std::string, double> params;
  bool pass = true;
  std::vector<Measurement> measurements;
  std::map<std::string, std::vector<double>> series;  // plottable time series
  std::string note;

  void add(std::string mname, double value, const char* cmp, double target, double tol = 0.0) {
    Measurement m;
    m.name = std::move(mname);
    m.value = value;
    m.target = target;
    m.cmp = cmp;
    m.tol = tol;
    if (m.cmp == ">=")
      m.pass = value >= target - tol;
    else if (m.cmp == "<=")
      m.pass = value <= target + tol;
    else if (m.cmp == "near" || m.cmp == "eq")
      m.pass = std::abs(value - target) <= tol;
    else
      throw std::invalid_argument("Measurement: unknown comparison " + m.cmp);
    pass = pass && m.pass;
    measurements.push_back(std::move(m));
  }
};

using ExperimentParams = std::map<std::string, double>;

inline double param_or(const ExperimentParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

namespace detail {

inline void echo_params(ExperimentReport& rep, std::initializer_list<std::pair<const char*, double>> kv) {
  for (const auto& [k, v] : kv) rep.params[k] = v;
}

/// Fixed bid vector as a verified NOB PNE at the all-ones profile, plus the
/// resulting PoA ratio: the common skeleton of the single-item lower bounds.
inline ExperimentReport single_lower_bound(const std::string& name, MechanismKind mech_kind, bool case_two,
                                           double beta, double gc, double eps_v, int grid) {
  ExperimentReport rep;
  rep.name = name;
  ValuationModel mdl = case_two ? ValuationModel::lower_bound_case2(beta, gc, eps_v, grid)
                                : ValuationModel::lower_bound_case1(beta, gc, eps_v, grid);
  StrategyProfile sigma = StrategyProfile::constant_single(mdl, {0.0, 1.0, 1.0});
  VerifyContext ctx;
  ctx.mode = EqMode::pne;
  ctx.at = SignalProfile::from_vector({1, 1, 1});
  MechanismSpec mech = MechanismSpec::of(mech_kind);
  NobReport nob = check_nob_single(sigma.apply(mdl, ctx.at).bids, ctx.at);
  EquilibriumReport ver;
  WelfareReport wf = poa_report(mech, mdl, sigma, ctx, 1e-9, true, &ver);
  rep.add("nob", nob.pass ? 1 : 0, "eq", 1, 0);
  rep.add("pne_verified", ver.pass ? 1 : 0, "eq", 1, 0);
  double expect = (gc * beta + eps_v) / (beta + 1.0);
  rep.add("poa_ratio_formula", wf.poa_ratio, "near", expect, 1e-9);
  rep.add("poa_ratio_vs_limit", wf.poa_ratio, "near", gc, 0.01 * gc);
  return rep;
}

inline int binomial_small(Rng& rng, int trials, double p) {
  // geometric skipping; exact for small p
  int count = 0;
  double log1mp = std::log1p(-p);
  double pos = 0;
  while (true) {
    double u = rng.u01();
    if (u <= 0.0) u = 1e-300;
    pos += std::floor(std::log(u) / log1mp) + 1.0;
    if (pos > trials) break;
    ++count;
  }
  return count;
}

struct MeanAcc {
  double sum = 0.0, sumsq = 0.0;
  uint64_t n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double stderr_() const {
    if (n < 2) return 0.0;
    double m = mean();
    double var = std::max(0.0, sumsq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace detail

// ---- Monte Carlo operations ---------------------------------------------------

/// Balls-and-bins negative instance: n^2 common-value items, Bernoulli(1/n)
/// signals. Reports (a) per-block max vs the lower-bound threshold, (b) the
/// global max vs its cap, (c) the best value in a random ln^2(n)-item subset
/// vs its cap, (d) the matching-based OPT estimate and its ratio to the
/// per-agent value cap.
inline ExperimentReport montecarlo_multineg(int n, int trials, uint64_t seed) {
  if (n < 16 || trials < 100) throw std::invalid_argument("montecarlo_multineg: need n >= 16, trials >= 100");
  ExperimentReport rep;
  rep.name = "ballsbins_multineg";
  detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"trials", static_cast<double>(trials)},
                            {"seed", static_cast<double>(seed)}});
  int items = n * n;
  double ln_n = std::log(static_cast<double>(n));
  double lnln_n = std::log(ln_n);
  double lnlnln_n = std::log(lnln_n);
  int subset = static_cast<int>(std::llround(ln_n * ln_n));
  subset = std::min(std::max(subset, 1), items);

  detail::MeanAcc block_max, global_max, subset_max, opt_est;
  std::vector<double> max_histogram(32, 0.0);
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
    std::vector<double> value(static_cast<size_t>(items));
    for (int l = 0; l < items; ++l)
      value[static_cast<size_t>(l)] = 1.0 + detail::binomial_small(rng, n, 1.0 / static_cast<double>(n));
    double gmax = 0.0;
    std::vector<double> bmax(static_cast<size_t>(n), 0.0);
    for (int b = 0; b < n; ++b) {
      double mx = 0.0;
      for (int l = b * n; l < (b + 1) * n; ++l) mx = std::max(mx, value[static_cast<size_t>(l)]);
      bmax[static_cast<size_t>(b)] = mx;
      block_max.add(mx);
      gmax = std::max(gmax, mx);
    }
    global_max.add(gmax);
    int bin = std::min(31, static_cast<int>(gmax));
    max_histogram[static_cast<size_t>(bin)] += 1.0;
    // uniformly random subset without replacement
    double smax = 0.0;
    std::vector<int> picked;
    picked.reserve(static_cast<size_t>(subset));
    while (static_cast<int>(picked.size()) < subset) {
      int cand = rng.below(items);
      bool dup = false;
      for (int q : picked) dup = dup || q == cand;
      if (!dup) {
        picked.push_back(cand);
        smax = std::max(smax, value[static_cast<size_t>(cand)]);
      }
    }
    subset_max.add(smax);
    // common values: the matching on (agents x best-item-per-block) realizes
    // the block-max sum; run the exact solver to confirm
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < n; ++b) W[static_cast<size_t>(i)][static_cast<size_t>(b)] = bmax[static_cast<size_t>(b)];
    opt_est.add(max_matching_value(W));
  }

  rep.series["global_max_histogram"] = max_histogram;
  double lb_threshold = 1.0 + ln_n / (3.0 * lnln_n);
  double cap_global = 4.0 * ln_n / lnln_n + 3.0;
  double cap_subset = 4.0 * lnln_n / lnlnln_n + 4.0;
  rep.add("block_max_mean", block_max.mean(), ">=", lb_threshold, 3.0 * block_max.stderr_());
  rep.add("global_max_mean", global_max.mean(), "<=", cap_global, 3.0 * global_max.stderr_());
  rep.add("subset_max_mean", subset_max.mean(), "<=", cap_subset, 3.0 * subset_max.stderr_());
  rep.add("opt_estimate_mean", opt_est.mean(), ">=",
          static_cast<double>(n) * lb_threshold, 3.0 * opt_est.stderr_() + 3.0 * static_cast<double>(n) * block_max.stderr_());
  rep.add("opt_over_per_agent_cap", opt_est.mean() / cap_global, ">=", 1.3, 0.0);
  return rep;
}

/// Weighted-sum family under i.i.d. exponential (MHR) signals: the measured
/// OPT never exceeds (1 + e^2) times the truncated OPT, up to 3 sigma.
inline ExperimentReport montecarlo_weighted_sum(int n, double beta, int trials, uint64_t seed) {
  if (n < 2) throw std::invalid_argument("montecarlo_weighted_sum: need n >= 2");
  ExperimentReport rep;
  rep.name = "weighted_sum_mhr";
  rep.note = "weighted-sum family reconstructed from the proof; flagged";
  detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"beta", beta},
                            {"trials", static_cast<double>(trials)}, {"seed", static_cast<double>(seed)}});
  ValuationModel mdl = ValuationModel::weighted_sum(n, beta);
  int m = mdl.items();
  detail::MeanAcc o_acc, t_acc;
  double tilde_floor_violations = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
    SignalProfile s(n, m);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l) s.at(i, l) = std::min(mdl.space(i, l).hi, rng.exponential());
    o_acc.add(opt(mdl, s));
    t_acc.add(truncated_opt(mdl, s));
    // truncated floor: tilde v >= beta * sum of all-but-largest signals
    for (int l = 0; l < std::min(m, 2); ++l) {
      std::vector<double> col = s.column(l);
      double top = *std::max_element(col.begin(), col.end());
      double sum = 0.0;
      for (double x : col) sum += x;
      double floorv = beta * (sum - top);
      for (int i = 0; i < n; ++i)
        if (mdl.truncated_value(l, ColumnView(s, l), i) < floorv - 1e-9) tilde_floor_violations += 1;
    }
  }
  double bound = 1.0 + std::exp(2.0);
  double slack = 3.0 * (o_acc.stderr_() + bound * t_acc.stderr_());
  rep.add("opt_mean", o_acc.mean(), ">=", 0.0, 0.0);
  rep.add("truncated_opt_mean", t_acc.mean(), ">=", 0.0, 0.0);
  rep.add("opt_vs_bound_times_truncated", o_acc.mean(), "<=", bound * t_acc.mean(), slack);
  rep.add("measured_ratio", o_acc.mean() / t_acc.mean(), "<=", bound, slack);
  rep.add("truncated_floor_violations", tilde_floor_violations, "eq", 0, 0);
  return rep;
}

// ---- named reproductions --------------------------------------------------------

inline ExperimentReport reproduce_upper_bound_search(const ExperimentParams& params);

inline ExperimentReport reproduce(const std::string& name, const ExperimentParams& params = {}) {
  uint64_t seed = static_cast<uint64_t>(param_or(params, "seed", 20250810));
  int grid = static_cast<int>(param_or(params, "grid", 64));

  if (name == "single_lb_case1" || name == "single_lb_case2" || name == "spa_lb_case1" ||
      name == "spa_lb_case2" || name == "spa_lb") {
    double beta = param_or(params, "beta", 1e4);
    double eps_v = param_or(params, "eps", 1e-2);
    bool spa = name.rfind("spa", 0) == 0;
    MechanismKind mech = spa ? MechanismKind::second_price : MechanismKind::gva;
    ExperimentReport rep;
    if (name == "single_lb_case1" || name == "spa_lb_case1") {
      rep = detail::single_lower_bound(name, mech, false, beta, param_or(params, "c", 2.0), eps_v, grid);
    } else if (name == "single_lb_case2" || name == "spa_lb_case2") {
      rep = detail::single_lower_bound(name, mech, true, beta, param_or(params, "gamma", 3.0), eps_v, grid);
    } else {  // spa_lb: both cases under the second-price payment rule
      ExperimentReport c1 = detail::single_lower_bound("spa_lb_case1", mech, false, beta,
                                                       param_or(params, "c", 2.0), eps_v, grid);
      ExperimentReport c2 = detail::single_lower_bound("spa_lb_case2", mech, true, beta,
                                                       param_or(params, "gamma", 3.0), eps_v, grid);
      rep.name = name;
      for (auto& m : c1.measurements) {
        m.name = "case1_" + m.name;
        rep.pass = rep.pass && m.pass;
        rep.measurements.push_back(m);
      }
      for (auto& m : c2.measurements) {
        m.name = "case2_" + m.name;
        rep.pass = rep.pass && m.pass;
        rep.measurements.push_back(m);
      }
    }
    detail::echo_params(rep, {{"beta", beta}, {"eps", eps_v}, {"grid", static_cast<double>(grid)},
                              {"seed", static_cast<double>(seed)}});
    return rep;
  }

  if (name == "gva_poa_linear") {
    int n = static_cast<int>(param_or(params, "n", 20));
    double eps_v = param_or(params, "eps", 0.01);
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"eps", eps_v},
                              {"grid", static_cast<double>(grid)}, {"seed", static_cast<double>(seed)}});
    ValuationModel mdl = ValuationModel::bad_example1(n, eps_v, grid);
    StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>&) {
      return std::vector<double>{i <= 1 ? 1.0 : 0.0};
    });
    VerifyContext ctx;
    ctx.mode = EqMode::epe;
    ctx.epe_budget = static_cast<uint64_t>(param_or(params, "epe_budget", 3000));
    ctx.seed = seed;
    EquilibriumReport ver = verify(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true);
    rep.add("epe_verified", ver.pass ? 1 : 0, "eq", 1, 0);
    SignalProfile ones(n, 1, 1.0);
    VerifyContext at;
    at.mode = EqMode::pne;
    at.at = ones;
    WelfareReport wf = poa_report(MechanismSpec::of(MechanismKind::gva), mdl, sigma, at, 1e-9, true);
    rep.add("poa_ratio", wf.poa_ratio, "near", (n + eps_v) / (2.0 + 2.0 * eps_v), 1e-6);
    return rep;
  }

  if (name == "epic_sqrt_n") {
    int n = static_cast<int>(param_or(params, "n", 16));
    double eps_v = param_or(params, "eps", 0.01);
    ExperimentReport rep;
    rep.name = name;
    rep.note = "instantiated with GVA as the representative ex-post IC-IR mechanism";
    detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"eps", eps_v},
                              {"grid", static_cast<double>(grid)}, {"seed", static_cast<double>(seed)}});
    ValuationModel mdl = ValuationModel::bad_example2(n, eps_v, grid);
    StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>& own) {
      if (i <= 1) return own;
      return std::vector<double>{0.0};
    });
    VerifyContext ctx;
    ctx.mode = EqMode::epe;
    ctx.epe_budget = static_cast<uint64_t>(param_or(params, "epe_budget", 3000));
    ctx.seed = seed;
    EquilibriumReport ver = verify(MechanismSpec::of(MechanismKind::gva), mdl, sigma, ctx, 1e-9, true);
    rep.add("epe_verified", ver.pass ? 1 : 0, "eq", 1, 0);
    SignalProfile ones(n, 1, 1.0);
    VerifyContext at;
    at.mode = EqMode::pne;
    at.at = ones;
    WelfareReport wf = poa_report(MechanismSpec::of(MechanismKind::gva), mdl, sigma, at, 1e-9, true);
    rep.add("poa_ratio", wf.poa_ratio, "near", (n + eps_v) / std::sqrt(static_cast<double>(n)), 1e-6);
    return rep;
  }

  if (name == "no_pne_sine") {
    int pts = static_cast<int>(param_or(params, "grid", 300));  // points on [0, 2pi]
    double eps_gain = param_or(params, "eps", 0.5);
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"grid", static_cast<double>(pts)}, {"eps", eps_gain}});
    ValuationModel mdl = ValuationModel::sine_pair(3 * pts / 2);  // [0,3pi]: 2pi lands on the grid
    double two_pi = 2 * std::numbers::pi;
    SignalProfile s = SignalProfile::from_vector({two_pi, two_pi});
    PneScanResult res = scan_nob_pne(MechanismSpec::of(MechanismKind::gva), mdl, s, eps_gain);
    rep.add("profiles_checked", static_cast<double>(res.profiles_checked), "eq",
            static_cast<double>((pts + 1)) * (pts + 1), 0);
    rep.add("min_max_gain", res.min_max_gain, ">=", eps_gain, 0);
    rep.add("pne_found", res.found ? 1 : 0, "eq", 0, 0);
    rep.note = "certificate valid at the stated grid resolution";
    return rep;
  }

  if (name == "rsv_exponential") {
    ExperimentReport rep;
    rep.name = name;
    int n_lo = static_cast<int>(param_or(params, "n_lo", 6));
    int n_hi = static_cast<int>(param_or(params, "n_hi", 12));
    detail::echo_params(rep, {{"n_lo", static_cast<double>(n_lo)}, {"n_hi", static_cast<double>(n_hi)},
                              {"seed", static_cast<double>(seed)}});
    rep.note = "payment rule reconstructed as the zeroed-out second-price threshold";
    std::vector<double> ratios;
    for (int n = n_lo; n <= n_hi; ++n) {
      double c = 2.0 * std::pow(2.0, n);
      ValuationModel mdl = ValuationModel::rsv_example(n, c, 4);
      StrategyProfile sigma = StrategyProfile::tabulate(mdl, [&](int i, const std::vector<double>& own) {
        return std::vector<double>{i == 0 ? own[0] : 0.0};
      });
      SignalProfile ones(n, 1, 1.0);
      VerifyContext ctx;
      ctx.mode = EqMode::pne;
      ctx.at = ones;
      EquilibriumReport ver = verify(MechanismSpec::of(MechanismKind::random_sampling_vickrey), mdl, sigma,
                                     ctx, 1e-9, true);
      if (n == n_lo) rep.add("pne_verified_n_lo", ver.pass ? 1 : 0, "eq", 1, 0);
      BidProfile bids = sigma.apply(mdl, ones);
      RsvExpectation ex = rsv_expectation(mdl, bids, ones);
      double optv = opt(mdl, ones);
      ratios.push_back(optv / ex.expected_welfare);
      if (n == 10) {
        rep.add("n10_win_probability", ex.win_probability[0], "eq", std::pow(2.0, -10), 0);
        rep.add("n10_opt", optv, "eq", 18433.0, 0);
        rep.add("n10_expected_welfare", ex.expected_welfare, "<=", 39.0, 0);
        rep.add("n10_ratio", optv / ex.expected_welfare, ">=", 256.0, 0);
      }
    }
    rep.series["ratio_vs_n"] = ratios;
    for (size_t k = 0; k + 1 < ratios.size(); ++k) {
      double growth = ratios[k + 1] / ratios[k];
      rep.add("growth_n" + std::to_string(n_lo + static_cast<int>(k)), growth, "near", 2.0, 0.5);
    }
    return rep;
  }

  if (name == "proportional_mixture") {
    double mix_eps = param_or(params, "eps", 0.1);
    int n = static_cast<int>(param_or(params, "n", 2));
    int steps = static_cast<int>(param_or(params, "grid", 8));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"eps", mix_eps}, {"n", static_cast<double>(n)},
                              {"grid", static_cast<double>(steps)}});
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) W[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
    ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, steps));
    SignalProfile s(n, 1);
    for (int i = 0; i < n; ++i) s.at(i) = mdl.space(i).point(steps - i);  // distinct, on grid
    MechanismSpec mech = MechanismSpec::mixture_of(MechanismKind::gva, mix_eps);
    PneScanResult res = scan_nob_pne(mech, mdl, s, 1e-12);
    bool unique_truthful = res.found && res.equilibria.size() == 1 && res.equilibria[0].data == s.data;
    rep.add("unique_truthful_pne", unique_truthful ? 1 : 0, "eq", 1, 0);
    // welfare of the truthful equilibrium against the mixture bound
    BidProfile truthful{s};
    double eq = expected_welfare(mech, mdl, truthful, s);
    double optv = opt(mdl, s);
    rep.add("poa_ratio", optv / eq, "<=", 1.0 / (1.0 - mix_eps), 1e-9);
    return rep;
  }

  if (name == "participation_necessity") {
    int n = static_cast<int>(param_or(params, "n", 10));
    int m = static_cast<int>(param_or(params, "m", 10));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"m", static_cast<double>(m)}});
    ValuationModel mdl = ValuationModel::participation_necessity(n, m, grid);
    SignalProfile ones(n, m, 1.0);
    // agent 0 cannot avoid winning everything; zero bids minimize payments
    StrategyProfile sigma;
    sigma.agents.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      StrategyTable::Entry e;
      e.own_signal.assign(static_cast<size_t>(m), 1.0);
      e.bid.assign(static_cast<size_t>(m), i == 0 ? 0.0 : 1.0);
      sigma.agents[static_cast<size_t>(i)].add(std::move(e));
    }
    MechanismSpec mech = MechanismSpec::of(MechanismKind::sim_second_price_mandatory);
    VerifyContext ctx;
    ctx.mode = EqMode::pne;
    ctx.at = ones;
    EquilibriumReport ver = verify(mech, mdl, sigma, ctx, 1e-9, true);
    rep.add("pne_verified", ver.pass ? 1 : 0, "eq", 1, 0);
    BidProfile bids = sigma.apply(mdl, ones);
    Outcome o = run_mechanism(mech, mdl, bids);
    double eq = outcome_welfare(mdl, o, ones);
    double optv = opt(mdl, ones);
    rep.add("eq_welfare", eq, "eq", n + 1.0, 1e-9);
    rep.add("opt", optv, "eq", (n + 1.0) + (std::min(n, m) - 1.0) * (n + 0.5), 1e-9);
    rep.add("poa_ratio", optv / eq, ">=", 0.9 * m, 0);
    return rep;
  }

  if (name == "tildeopt_far") {
    int m = static_cast<int>(param_or(params, "m", 10));
    int n = static_cast<int>(param_or(params, "n", m));
    double eps_v = param_or(params, "eps", 0.1);
    int steps = static_cast<int>(param_or(params, "grid", 10));
    ExperimentReport rep;
    rep.name = name;
    rep.note = "valuations reconstructed: v_1l = s_1, v_il = (1-eps) s_1 for i >= 2";
    detail::echo_params(rep, {{"n", static_cast<double>(n)}, {"m", static_cast<double>(m)},
                              {"eps", eps_v}, {"grid", static_cast<double>(steps)}});
    ValuationModel mdl = ValuationModel::tilde_opt_far(n, m, eps_v, steps);
    // agent 0's signal is shared across items; others are pinned singletons
    StrategyProfile sigma;
    sigma.agents.resize(static_cast<size_t>(n));
    Prior prior;
    const SignalSpace& sp0 = mdl.space(0, 0);
    for (int k = 0; k < sp0.point_count(); ++k) {
      StrategyTable::Entry e;
      e.own_signal.assign(static_cast<size_t>(m), sp0.point(k));
      e.bid.assign(static_cast<size_t>(m), sp0.point(k) / static_cast<double>(m));
      e.participation.assign(static_cast<size_t>(m), 1);
      sigma.agents[0].add(std::move(e));
      SignalProfile s(n, m, 0.0);
      for (int l = 0; l < m; ++l) s.at(0, l) = sp0.point(k);
      prior.atoms.emplace_back(std::move(s), 1.0 / sp0.point_count());
    }
    for (int i = 1; i < n; ++i) {
      StrategyTable::Entry e;
      e.own_signal.assign(static_cast<size_t>(m), 0.0);
      e.bid.assign(static_cast<size_t>(m), 0.0);
      e.participation.assign(static_cast<size_t>(m), 0);
      sigma.agents[static_cast<size_t>(i)].add(std::move(e));
    }
    MechanismSpec mech = MechanismSpec::of(MechanismKind::sim_privatized_spa);
    VerifyContext ctx;
    ctx.mode = EqMode::epe;
    ctx.epe_budget = 100000;
    ctx.seed = seed;
    EquilibriumReport ver = verify(mech, mdl, sigma, ctx, 1e-9, true);
    rep.add("epe_verified", ver.pass ? 1 : 0, "eq", 1, 0);
    NobReport nob = check_nob_multi(mech, mdl, sigma, prior);
    rep.add("nob", nob.pass ? 1 : 0, "eq", 1, 0);
    AsymmetryReport asym = asymmetry_d(mdl, prior);
    double d_formula = 1.0 + (m - 1.0) * (1.0 - eps_v);  // = m(1-eps) + eps
    rep.add("d", asym.d, "near", d_formula, 1e-9);
    rep.add("d_grows_with_m", asym.d, ">=", 0.9 * m * (1.0 - eps_v), 0);
    double eq = 0.0;
    for (const auto& [s, p] : prior.atoms)
      eq += p * expected_welfare(mech, mdl, sigma.apply(mdl, s), s);
    rep.add("eq_equals_truncated_opt", eq, "near", asym.truncated_opt, 1e-9);
    rep.add("poa_ratio", asym.opt / std::max(eq, 1e-300), "near", d_formula, 1e-6);
    return rep;
  }

  if (name == "ballsbins_multineg") {
    return montecarlo_multineg(static_cast<int>(param_or(params, "n", 64)),
                               static_cast<int>(param_or(params, "trials", 1000)), seed);
  }
  if (name == "weighted_sum_mhr") {
    return montecarlo_weighted_sum(static_cast<int>(param_or(params, "n", 10)),
                                   param_or(params, "beta", 1.0),
                                   static_cast<int>(param_or(params, "trials", 2000)), seed);
  }

  if (name == "smoothness_sweep") {
    int cases = static_cast<int>(param_or(params, "cases", 10000));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"cases", static_cast<double>(cases)}, {"seed", static_cast<double>(seed)}});
    int violations = 0;
    double min_slack = kInf;
    for (int t = 0; t < cases; ++t) {
      Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
      int n = 2 + rng.below(3);
      std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
      for (int j = 0; j < n; ++j) {
        double diag = 0.5 + rng.u01();
        for (int i = 0; i < n; ++i)
          W[static_cast<size_t>(i)][static_cast<size_t>(j)] = i == j ? diag : rng.u01() * diag;
      }
      std::vector<double> offs(static_cast<size_t>(n));
      for (auto& o : offs) o = 0.4 * rng.u01();
      ValuationModel mdl = ValuationModel::linear_weighted(W, offs, SignalSpace(0, 1, 8));
      SignalProfile s(n, 1), bids(n, 1);
      for (int i = 0; i < n; ++i) {
        int si = rng.below(9);
        s.at(i) = mdl.space(i).point(si);
        bids.at(i) = mdl.space(i).point(rng.below(si + 1));
      }
      double slack = 0;
      if (!check_smoothness_single(mdl, *mdl.declared_gamma(), *mdl.declared_c(), s, BidProfile{bids},
                                   1e-7, &slack))
        ++violations;
      min_slack = std::min(min_slack, slack);
    }
    rep.add("violations", violations, "eq", 0, 0);
    rep.add("min_slack", min_slack, ">=", -1e-7, 0);
    return rep;
  }

  if (name == "allin_lemma_sweep") {
    int cases = static_cast<int>(param_or(params, "cases", 10000));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"cases", static_cast<double>(cases)}, {"seed", static_cast<double>(seed)}});
    int violations_self = 0, violations_other = 0;
    for (int t = 0; t < cases; ++t) {
      Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
      int n = 2 + rng.below(4), m = 2 + rng.below(4);
      std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
      for (auto& row : W)
        for (auto& x : row) x = 0.05 + rng.u01();
      ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 3), m);
      SignalProfile s(n, m), bids(n, m);
      std::vector<uint8_t> part(static_cast<size_t>(n * m));
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < m; ++l) {
          int si = rng.below(4);
          s.at(i, l) = mdl.space(i, l).point(si);
          bids.at(i, l) = mdl.space(i, l).point(rng.below(si + 1));
          part[static_cast<size_t>(i * m + l)] = rng.bernoulli(0.75) ? 1 : 0;
        }
      AllInCheck chk = check_allin_lemma(mdl, *mdl.declared_gamma(), *mdl.declared_c(), s,
                                         BidProfile{bids, part}, rng.below(n), rng.below(m), 1e-7);
      if (!chk.bound_self) ++violations_self;
      if (!chk.bound_other) ++violations_other;
    }
    rep.add("violations_bound_self", violations_self, "eq", 0, 0);
    rep.add("violations_bound_other", violations_other, "eq", 0, 0);
    return rep;
  }

  if (name == "covers_lemma_sweep") {
    int cases = static_cast<int>(param_or(params, "cases", 10000));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"cases", static_cast<double>(cases)}, {"seed", static_cast<double>(seed)}});
    int violations = 0;
    for (int t = 0; t < cases; ++t) {
      Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
      int n = 2 + rng.below(4);
      std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
      for (auto& row : W)
        for (auto& x : row) x = 0.05 + rng.u01();
      ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 4), 2);
      SignalProfile s(n, 2);
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < 2; ++l) s.at(i, l) = mdl.space(i, l).point(rng.below(5));
      if (!check_covers_lemma(mdl, *mdl.declared_gamma(), *mdl.declared_c(), s, rng.below(n), rng.below(n),
                              rng.below(2), 1e-7))
        ++violations;
    }
    rep.add("violations", violations, "eq", 0, 0);
    // the mandated counterexample without submodularity
    ValuationModel pc = ValuationModel::product_cross();
    SignalProfile ones(3, 1, 1.0);
    double slack = 0;
    bool holds = check_covers_lemma(pc, 1.0, 1.0, ones, 0, 1, 0, 1e-9, &slack);
    rep.add("product_cross_fails", holds ? 1 : 0, "eq", 0, 0);
    rep.add("product_cross_slack", slack, "eq", -1.0, 1e-12);
    return rep;
  }

  if (name == "diff_bound_sweep") {
    int cases = static_cast<int>(param_or(params, "cases", 10000));
    ExperimentReport rep;
    rep.name = name;
    detail::echo_params(rep, {{"cases", static_cast<double>(cases)}, {"seed", static_cast<double>(seed)}});
    int lemma_violations = 0, corollary_violations = 0;
    for (int t = 0; t < cases; ++t) {
      Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
      int n = 2 + rng.below(3);
      std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
      for (auto& row : W)
        for (auto& x : row) x = 0.02 + rng.u01();
      ValuationModel mdl = ValuationModel::linear_weighted(W, {}, SignalSpace(0, 1, 8));
      double mgc = std::max(*mdl.declared_gamma(), *mdl.declared_c());
      SignalProfile s(n, 1);
      std::vector<double> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n));
      int i = rng.below(n);
      for (int k = 0; k < n; ++k) {
        int base = rng.below(9);
        lo[static_cast<size_t>(k)] = mdl.space(k).point(base);
        int up = k == i ? 0 : rng.below(9 - base);
        hi[static_cast<size_t>(k)] = mdl.space(k).point(base + up);
      }
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double vi0 = value_of(mdl, i, 0, lo), vi1 = value_of(mdl, i, 0, hi);
        double vj0 = value_of(mdl, j, 0, lo), vj1 = value_of(mdl, j, 0, hi);
        if ((vj1 - vj0) < (vi1 - vi0) / mgc - 1e-7) ++lemma_violations;
        if (vj0 >= vi0 / mgc - 1e-12 && vj1 < vi1 / mgc - 1e-7) ++corollary_violations;
      }
    }
    rep.add("lemma_violations", lemma_violations, "eq", 0, 0);
    rep.add("corollary_violations", corollary_violations, "eq", 0, 0);
    return rep;
  }

  if (name == "upper_bound_search") {
    return reproduce_upper_bound_search(params);
  }

  throw std::invalid_argument("reproduce: unknown experiment '" + name + "'");
}

/// Exhaustive NOB PNE search over random linear instances, checking the
/// single-item PoA upper bounds against the measured heterogeneity and
/// single-crossing parameters, for both GVA and second-price.
inline ExperimentReport reproduce_upper_bound_search(const ExperimentParams& params) {
  ExperimentReport rep;
  rep.name = "upper_bound_search";
  uint64_t seed = static_cast<uint64_t>(param_or(params, "seed", 20250810));
  int instances = static_cast<int>(param_or(params, "instances", 200));
  int steps = static_cast<int>(param_or(params, "grid", 4));
  detail::echo_params(rep, {{"instances", static_cast<double>(instances)},
                            {"grid", static_cast<double>(steps)}, {"seed", static_cast<double>(seed)}});
  int equilibria_found = 0, instances_with_eq = 0;
  int violations_combined = 0, violations_sc = 0;
  double worst_margin = kInf;
  for (int t = 0; t < instances; ++t) {
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(t));
    int n = 2 + rng.below(3);
    bool force_sc = rng.bernoulli(0.5);
    std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (int j = 0; j < n; ++j) {
      double diag = 0.4 + rng.u01();
      for (int i = 0; i < n; ++i) {
        double cap = force_sc ? diag : 2.5 * diag;
        W[static_cast<size_t>(i)][static_cast<size_t>(j)] = i == j ? diag : 0.02 + rng.u01() * (cap - 0.02);
      }
    }
    std::vector<double> offs(static_cast<size_t>(n));
    for (auto& o : offs) o = 0.1 + 0.4 * rng.u01();
    ValuationModel mdl = ValuationModel::linear_weighted(W, offs, SignalSpace(0, 1, steps));
    CheckOptions copts;
    copts.threads = 1;
    double chat = estimate_c(mdl, copts).estimate;
    double ghat = estimate_gamma(mdl, copts).estimate;
    SignalProfile s(n, 1);
    for (int i = 0; i < n; ++i) s.at(i) = mdl.space(i).point(1 + rng.below(steps));
    bool any = false;
    for (MechanismKind kind : {MechanismKind::gva, MechanismKind::second_price}) {
      PneScanResult res = scan_nob_pne(MechanismSpec::of(kind), mdl, s, 1e-9, 64);
      for (const SignalProfile& b : res.equilibria) {
        ++equilibria_found;
        any = true;
        int w = single_winner(mdl, b);
        double eq = mdl.value(w, s);
        double optv = opt(mdl, s);
        double ratio = optv / eq;
        double bound = 1.0 + std::max(ghat, chat);
        worst_margin = std::min(worst_margin, bound + 1e-6 - ratio);
        if (ratio > bound + 1e-6) ++violations_combined;
        if (chat <= 1.0 + 1e-9 && ratio > ghat + 1e-6) ++violations_sc;
      }
    }
    if (any) ++instances_with_eq;
  }
  rep.add("instances_with_equilibria", instances_with_eq, ">=", instances / 4, 0);
  rep.add("equilibria_found", equilibria_found, ">=", instances / 4, 0);
  rep.add("violations_combined_bound", violations_combined, "eq", 0, 0);
  rep.add("violations_sc_gamma_bound", violations_sc, "eq", 0, 0);
  rep.add("worst_margin", worst_margin, ">=", 0, 0);
  return rep;
}

}  // namespace iva
