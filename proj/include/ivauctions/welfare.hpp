#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivauctions/equilibrium.hpp"
#include "ivauctions/matching.hpp"
#include "ivauctions/mechanisms.hpp"
#include "ivauctions/rng.hpp"
#include "ivauctions/strategy.hpp"
#include "ivauctions/valuation.hpp"

namespace iva {

inline std::vector<std::vector<double>> value_matrix(const ValuationModel& mdl, const SignalProfile& s) {
  int n = mdl.agents(), m = mdl.items();
  std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(m)));
  for (int l = 0; l < m; ++l) {
    ColumnView col(s, l);
    for (int i = 0; i < n; ++i)
      W[static_cast<size_t>(i)][static_cast<size_t>(l)] = std::max(0.0, mdl.item_value(i, l, col));
  }
  return W;
}

inline std::vector<std::vector<double>> truncated_matrix(const ValuationModel& mdl, const SignalProfile& s) {
  int n = mdl.agents(), m = mdl.items();
  std::vector<std::vector<double>> W(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(m)));
  for (int l = 0; l < m; ++l) {
    ColumnView col(s, l);
    for (int i = 0; i < n; ++i)
      W[static_cast<size_t>(i)][static_cast<size_t>(l)] = std::max(0.0, mdl.truncated_value(l, col, i));
  }
  return W;
}

/// Optimal welfare at a signal profile: the highest value for one item, or
/// the exact max-weight matching value for unit-demand agents.
inline double opt(const ValuationModel& mdl, const SignalProfile& s) {
  if (!mdl.multi_item()) {
    double best = 0.0;
    for (int i = 0; i < mdl.agents(); ++i) best = std::max(best, mdl.value(i, s));
    return best;
  }
  return max_matching_value(value_matrix(mdl, s));
}

/// Matching welfare with respect to the truncated values.
inline double truncated_opt(const ValuationModel& mdl, const SignalProfile& s) {
  if (!mdl.multi_item()) throw std::domain_error("truncated_opt: multi-item only");
  return max_matching_value(truncated_matrix(mdl, s));
}

inline double expected_opt(const ValuationModel& mdl, const Prior& prior) {
  double acc = 0.0;
  for (const auto& [s, p] : prior.atoms) acc += p * opt(mdl, s);
  return acc;
}

inline double expected_truncated_opt(const ValuationModel& mdl, const Prior& prior) {
  double acc = 0.0;
  for (const auto& [s, p] : prior.atoms) acc += p * truncated_opt(mdl, s);
  return acc;
}

struct SelfOther {
  double self = 0.0;
  double other = 0.0;
  double truncated_opt = 0.0;  // self + other, by construction over the same matching
};

/// Welfare decomposition over the truncated-optimal matching: SELF collects
/// the privatized parts, OTHER the rest. The matching is the
/// lexicographically smallest maximum matching so both terms are functions
/// of the instance alone.
inline SelfOther decompose_self_other(const ValuationModel& mdl, const Prior& prior) {
  if (!mdl.multi_item()) throw std::domain_error("decompose_self_other: multi-item only");
  SelfOther out;
  for (const auto& [s, p] : prior.atoms) {
    if (p <= 0.0) continue;
    Matching mt = lex_max_matching(truncated_matrix(mdl, s));
    for (const auto& [i, l] : mt.edges) {
      ColumnView col(s, l);
      double tilde = mdl.truncated_value(l, col, i);
      double hat = mdl.privatized_value(l, col, i);
      out.self += p * hat;
      out.other += p * (tilde - hat);
    }
    out.truncated_opt += p * mt.total;
  }
  return out;
}

struct AsymmetryReport {
  double d = 1.0;  // opt / truncated_opt; +inf when truncated_opt vanishes
  double opt = 0.0;
  double truncated_opt = 0.0;
  double opt_stderr = 0.0;
  double topt_stderr = 0.0;
  uint64_t samples = 0;
  uint64_t seed = 0;
  bool monte_carlo = false;
};

inline AsymmetryReport asymmetry_d(const ValuationModel& mdl, const Prior& prior) {
  AsymmetryReport rep;
  rep.opt = expected_opt(mdl, prior);
  rep.truncated_opt = expected_truncated_opt(mdl, prior);
  rep.d = rep.truncated_opt > 0.0 ? rep.opt / rep.truncated_opt : (rep.opt > 0.0 ? kInf : 1.0);
  return rep;
}

/// Monte Carlo variant for sampled continuous signal families. `draw` fills a
/// signal profile from one substream.
inline AsymmetryReport asymmetry_d_sampled(const ValuationModel& mdl, uint64_t samples, uint64_t seed,
                                           const std::function<void(Rng&, SignalProfile&)>& draw) {
  AsymmetryReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.monte_carlo = true;
  int n = mdl.agents(), m = mdl.items();
  double so = 0.0, so2 = 0.0, st = 0.0, st2 = 0.0;
  for (uint64_t t = 0; t < samples; ++t) {
    Rng rng = Rng::substream(seed, t);
    SignalProfile s(n, m);
    draw(rng, s);
    double o = opt(mdl, s);
    double to = truncated_opt(mdl, s);
    so += o;
    so2 += o * o;
    st += to;
    st2 += to * to;
  }
  double ns = static_cast<double>(samples);
  rep.opt = so / ns;
  rep.truncated_opt = st / ns;
  rep.opt_stderr = std::sqrt(std::max(0.0, so2 / ns - rep.opt * rep.opt) / ns);
  rep.topt_stderr = std::sqrt(std::max(0.0, st2 / ns - rep.truncated_opt * rep.truncated_opt) / ns);
  rep.d = rep.truncated_opt > 0.0 ? rep.opt / rep.truncated_opt : (rep.opt > 0.0 ? kInf : 1.0);
  return rep;
}

/// max(gamma, c) * tv_j >= tv_i - privatized_i at one point; requires the
/// submodularity flag, and fails without it (the product counterexample).
inline bool check_covers_lemma(const ValuationModel& mdl, double gamma, double c, const SignalProfile& s,
                               int i, int j, int item, double tol = 1e-9, double* slack_out = nullptr) {
  ColumnView col(s, item);
  double lhs = std::max(gamma, c) * mdl.truncated_value(item, col, j);
  double rhs = mdl.truncated_value(item, col, i) - mdl.privatized_value(item, col, i);
  double slack = lhs - rhs;
  if (slack_out) *slack_out = slack;
  return slack >= -tol;
}

struct WelfareReport {
  double opt = 0.0;
  double truncated_opt = 0.0;  // NaN-free: 0 for single-item models
  double eq = 0.0;
  double self = 0.0;
  double other = 0.0;
  double d = 1.0;
  double poa_ratio = 0.0;            // opt / eq
  double poa_ratio_truncated = 0.0;  // truncated_opt / eq (multi-item)
  bool multi = false;
  uint64_t seed = 0;
  uint64_t samples = 0;
  std::string note;
};

/// Equilibrium welfare and PoA ratios for a verified strategy profile. The
/// verification mode mirrors the context; a failing profile is rejected so a
/// ratio is never reported against a non-equilibrium.
inline WelfareReport poa_report(const MechanismSpec& mech, const ValuationModel& mdl,
                                const StrategyProfile& sigma, const VerifyContext& ctx, double eps,
                                bool nob, EquilibriumReport* verification = nullptr) {
  EquilibriumReport ver = verify(mech, mdl, sigma, ctx, eps, nob);
  if (verification) *verification = ver;
  if (!ver.pass) {
    throw std::runtime_error(
        "poa_report: strategy profile failed " + std::string(eq_mode_name(ctx.mode)) +
        " verification (agent " + std::to_string(ver.worst.agent) +
        ", gain " + std::to_string(ver.worst.gain) + ")");
  }

  WelfareReport rep;
  rep.multi = mdl.multi_item();
  rep.seed = ctx.seed;
  Prior prior = ctx.mode == EqMode::bne ? ctx.prior : Prior::point_mass(ctx.at);
  if (ctx.mode == EqMode::epe) {
    // EPE quantifies over signals; welfare is still reported at a prior,
    // defaulting to the point mass at ctx.at.
    prior = Prior::point_mass(ctx.at);
  }
  rep.samples = prior.atoms.size();
  rep.opt = expected_opt(mdl, prior);
  double eq = 0.0;
  for (const auto& [s, p] : prior.atoms)
    eq += p * expected_welfare(mech, mdl, sigma.apply(mdl, s), s);
  rep.eq = eq;
  if (rep.multi) {
    rep.note = "truncated values use the reconstructed min-over-single-zeroing definition";
    SelfOther so = decompose_self_other(mdl, prior);
    rep.self = so.self;
    rep.other = so.other;
    rep.truncated_opt = so.truncated_opt;
    rep.d = rep.truncated_opt > 0.0 ? rep.opt / rep.truncated_opt : (rep.opt > 0.0 ? kInf : 1.0);
    rep.poa_ratio_truncated = eq > 0.0 ? rep.truncated_opt / eq : (rep.truncated_opt > 0.0 ? kInf : 0.0);
  }
  rep.poa_ratio = eq > 0.0 ? rep.opt / eq : (rep.opt > 0.0 ? kInf : 0.0);
  return rep;
}

}  // namespace iva
