#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivauctions/signal.hpp"
#include "ivauctions/valuation.hpp"

namespace iva {

enum class MechanismKind {
  gva,
  second_price,
  first_price,
  random_sampling_vickrey,
  proportional,
  mixture,
  sim_privatized_spa,
  sim_second_price_mandatory,
};

inline const char* mechanism_name(MechanismKind k) {
  switch (k) {
    case MechanismKind::gva: return "gva";
    case MechanismKind::second_price: return "second_price";
    case MechanismKind::first_price: return "first_price";
    case MechanismKind::random_sampling_vickrey: return "random_sampling_vickrey";
    case MechanismKind::proportional: return "proportional";
    case MechanismKind::mixture: return "mixture";
    case MechanismKind::sim_privatized_spa: return "sim_privatized_spa";
    case MechanismKind::sim_second_price_mandatory: return "sim_second_price_mandatory";
  }
  return "?";
}

inline std::optional<MechanismKind> mechanism_from_name(const std::string& s) {
  static const std::pair<const char*, MechanismKind> table[] = {
      {"gva", MechanismKind::gva},
      {"second_price", MechanismKind::second_price},
      {"first_price", MechanismKind::first_price},
      {"random_sampling_vickrey", MechanismKind::random_sampling_vickrey},
      {"proportional", MechanismKind::proportional},
      {"mixture", MechanismKind::mixture},
      {"sim_privatized_spa", MechanismKind::sim_privatized_spa},
      {"sim_second_price_mandatory", MechanismKind::sim_second_price_mandatory},
  };
  for (const auto& [name, kind] : table)
    if (s == name) return kind;
  return std::nullopt;
}

/// Mechanism selector. Mixture runs `inner` with probability 1-eps and the
/// proportional allocation rule with probability eps.
struct MechanismSpec {
  MechanismKind kind = MechanismKind::gva;
  MechanismKind inner = MechanismKind::gva;
  double eps = 0.1;

  static MechanismSpec of(MechanismKind k) { return MechanismSpec{k, MechanismKind::gva, 0.0}; }
  static MechanismSpec mixture_of(MechanismKind inner, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("mixture eps must be in (0,1)");
    return MechanismSpec{MechanismKind::mixture, inner, eps};
  }
  bool single_item() const {
    return kind != MechanismKind::sim_privatized_spa && kind != MechanismKind::sim_second_price_mandatory;
  }
};

/// Reported bids; multi-item reports carry a 0/1 participation matrix
/// (empty = everyone participates everywhere).
struct BidProfile {
  SignalProfile bids;
  std::vector<uint8_t> participation;

  BidProfile() = default;
  explicit BidProfile(SignalProfile b) : bids(std::move(b)) {}
  BidProfile(SignalProfile b, std::vector<uint8_t> part) : bids(std::move(b)), participation(std::move(part)) {
    if (!participation.empty() &&
        participation.size() != static_cast<size_t>(bids.n) * static_cast<size_t>(bids.m))
      throw std::invalid_argument("BidProfile: participation shape mismatch");
  }

  bool participates(int i, int l) const {
    if (participation.empty()) return true;
    return participation[static_cast<size_t>(i) * bids.m + l] != 0;
  }
};

struct Outcome {
  std::vector<std::optional<int>> winners;        // per item
  std::vector<double> payments;                   // per agent, >= 0
  std::vector<std::vector<double>> item_scores;   // per item: the values the allocation compared

  bool wins(int agent) const {
    for (const auto& w : winners)
      if (w && *w == agent) return true;
    return false;
  }
  std::vector<int> items_of(int agent) const {
    std::vector<int> out;
    for (int l = 0; l < static_cast<int>(winners.size()); ++l)
      if (winners[static_cast<size_t>(l)] && *winners[static_cast<size_t>(l)] == agent) out.push_back(l);
    return out;
  }
};

// ---- single-item core -------------------------------------------------------

/// Winner under the highest-value-at-bids rule, ties to the lowest index.
inline int single_winner(const ValuationModel& mdl, const SignalProfile& b) {
  int n = mdl.agents();
  int best = 0;
  double best_v = mdl.value(0, b);
  for (int i = 1; i < n; ++i) {
    double v = mdl.value(i, b);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

inline bool wins_single(const ValuationModel& mdl, SignalProfile& b, int agent, double bid) {
  b.at(agent) = bid;
  return single_winner(mdl, b) == agent;
}

struct CriticalBid {
  bool exists = false;
  double bid = 0.0;
};

/// Lowest report for which the agent wins, holding the others' bids fixed.
/// The scan walks the agent's grid in ascending order; when the model's
/// declared c-hat is at most 1 the winning set is an up-set, so the first
/// winning grid point is refined by bisection to 1e-9. For c > 1 the winning
/// set need not be upward closed and the global grid minimum is returned.
inline CriticalBid critical_bid(const ValuationModel& mdl, int agent, const SignalProfile& b_others,
                                double cap = kInf, std::optional<bool> bisect_override = std::nullopt) {
  const SignalSpace& sp = mdl.space(agent);
  SignalProfile b = b_others;
  double lo_cap = std::min(cap, sp.hi);
  int top = sp.floor_index(lo_cap);
  bool bisect = bisect_override ? *bisect_override
                                : (mdl.declared_c() && *mdl.declared_c() <= 1.0 + 1e-9);
  CriticalBid res;
  for (int k = 0; k <= top; ++k) {
    double bid = sp.point(k);
    if (!wins_single(mdl, b, agent, bid)) continue;
    res.exists = true;
    res.bid = bid;
    if (bisect && k > 0) {
      double lose = sp.point(k - 1), win = bid;
      while (win - lose > 1e-9) {
        double mid = 0.5 * (lose + win);
        if (wins_single(mdl, b, agent, mid))
          win = mid;
        else
          lose = mid;
      }
      res.bid = win;
    }
    return res;
  }
  return res;
}

/// GVA / second-price / first-price on a single item: allocate to the
/// highest-valued bidder at the reported signals, ties to the lowest index.
inline Outcome run_single(MechanismKind kind, const ValuationModel& mdl, const BidProfile& bp) {
  if (mdl.multi_item()) throw std::domain_error("run_single: multi-item model");
  const SignalProfile& b = bp.bids;
  int n = mdl.agents();
  Outcome out;
  out.payments.assign(static_cast<size_t>(n), 0.0);
  out.item_scores.push_back({});
  auto& scores = out.item_scores[0];
  scores.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) scores[static_cast<size_t>(i)] = mdl.value(i, b);
  int w = 0;
  for (int i = 1; i < n; ++i)
    if (scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(w)]) w = i;
  out.winners.push_back(w);
  switch (kind) {
    case MechanismKind::gva: {
      // The winner's own bid wins, so it caps the critical bid even when the
      // grid scan only finds a higher winning grid point.
      CriticalBid cb = critical_bid(mdl, w, b);
      double crit = b.at(w);
      if (cb.exists) crit = std::min(crit, cb.bid);
      SignalProfile at = b;
      at.at(w) = crit;
      out.payments[static_cast<size_t>(w)] = std::max(0.0, mdl.value(w, at));
      break;
    }
    case MechanismKind::second_price: {
      double second = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != w) second = std::max(second, scores[static_cast<size_t>(j)]);
      out.payments[static_cast<size_t>(w)] = second;
      break;
    }
    case MechanismKind::first_price:
      out.payments[static_cast<size_t>(w)] = scores[static_cast<size_t>(w)];
      break;
    default:
      throw std::invalid_argument("run_single: kind must be gva/second_price/first_price");
  }
  return out;
}

// ---- random-sampling Vickrey ------------------------------------------------

/// Partition encoded as a bitmask: bit i set means agent i is in set B.
/// The item goes to the bidder in B with the highest zeroed-out value
/// v_i(b_A, b_i, 0_{B \ {i}}); B empty leaves the item unallocated. The
/// payment is the zeroed-out second-price value (an ex-post IC threshold
/// for the induced auction within B).
inline Outcome run_rsv(const ValuationModel& mdl, const BidProfile& bp, uint32_t b_mask) {
  if (mdl.multi_item()) throw std::domain_error("run_rsv: multi-item model");
  int n = mdl.agents();
  const SignalProfile& b = bp.bids;
  Outcome out;
  out.payments.assign(static_cast<size_t>(n), 0.0);
  out.item_scores.push_back(std::vector<double>(static_cast<size_t>(n), 0.0));
  auto& z = out.item_scores[0];
  SignalProfile zeroed = b;
  int winner = -1;
  for (int i = 0; i < n; ++i) {
    if (!((b_mask >> i) & 1u)) continue;
    for (int j = 0; j < n; ++j)
      zeroed.at(j) = ((b_mask >> j) & 1u) && j != i ? 0.0 : b.at(j);
    z[static_cast<size_t>(i)] = mdl.value(i, zeroed);
    if (winner < 0 || z[static_cast<size_t>(i)] > z[static_cast<size_t>(winner)]) winner = i;
  }
  if (winner < 0) {
    out.winners.push_back(std::nullopt);
    return out;
  }
  out.winners.push_back(winner);
  double second = 0.0;
  for (int j = 0; j < n; ++j)
    if (j != winner && ((b_mask >> j) & 1u)) second = std::max(second, z[static_cast<size_t>(j)]);
  out.payments[static_cast<size_t>(winner)] = second;
  return out;
}

struct RsvExpectation {
  double expected_welfare = 0.0;
  std::vector<double> win_probability;
};

/// Exact expectation over all 2^n equally likely partitions (n <= 20).
inline RsvExpectation rsv_expectation(const ValuationModel& mdl, const BidProfile& bp,
                                      const SignalProfile& true_s) {
  int n = mdl.agents();
  if (n > 20) throw std::domain_error("rsv_expectation: exact enumeration limited to n <= 20");
  RsvExpectation res;
  res.win_probability.assign(static_cast<size_t>(n), 0.0);
  uint32_t total = 1u << n;
  double p = 1.0 / static_cast<double>(total);
  for (uint32_t mask = 0; mask < total; ++mask) {
    Outcome o = run_rsv(mdl, bp, mask);
    if (o.winners[0]) {
      int w = *o.winners[0];
      res.win_probability[static_cast<size_t>(w)] += p;
      res.expected_welfare += p * mdl.value(w, true_s);
    }
  }
  return res;
}

inline double rsv_expected_utility(const ValuationModel& mdl, const BidProfile& bp,
                                   const SignalProfile& true_s, int agent) {
  int n = mdl.agents();
  if (n > 20) throw std::domain_error("rsv_expected_utility: exact enumeration limited to n <= 20");
  uint32_t total = 1u << n;
  double p = 1.0 / static_cast<double>(total);
  double u = 0.0;
  for (uint32_t mask = 0; mask < total; ++mask) {
    Outcome o = run_rsv(mdl, bp, mask);
    if (o.winners[0] && *o.winners[0] == agent)
      u += p * (mdl.value(agent, true_s) - o.payments[static_cast<size_t>(agent)]);
  }
  return u;
}

// ---- proportional allocation and mixtures ------------------------------------

/// Allocation probabilities b_i / (sum_j b_j + 1); the residual mass
/// 1 / (sum + 1) withholds the item. No payments.
inline std::vector<double> run_proportional(const SignalProfile& bids) {
  double denom = 1.0;
  for (double x : bids.data) {
    if (x < 0.0) throw std::invalid_argument("run_proportional: bids must be nonnegative");
    denom += x;
  }
  std::vector<double> probs(static_cast<size_t>(bids.n));
  for (int i = 0; i < bids.n; ++i) probs[static_cast<size_t>(i)] = bids.at(i) / denom;
  return probs;
}

// ---- simultaneous item auctions ----------------------------------------------

/// Simultaneous privatized second-price auctions: each item goes to the
/// participant with the highest privatized value, paying the second-highest
/// participating privatized value (0 if alone). With `privatized == false`
/// this degrades to mandatory-participation second-price on the full values,
/// the rule behind the participation-necessity bound.
inline Outcome run_sim(const ValuationModel& mdl, const BidProfile& bp, bool privatized) {
  if (!mdl.multi_item()) throw std::domain_error("run_sim: single-item model");
  int n = mdl.agents(), m = mdl.items();
  if (bp.bids.n != n || bp.bids.m != m) throw std::invalid_argument("run_sim: bid shape mismatch");
  Outcome out;
  out.payments.assign(static_cast<size_t>(n), 0.0);
  out.winners.assign(static_cast<size_t>(m), std::nullopt);
  out.item_scores.assign(static_cast<size_t>(m), {});
  for (int l = 0; l < m; ++l) {
    auto& scores = out.item_scores[static_cast<size_t>(l)];
    scores.assign(static_cast<size_t>(n), 0.0);
    ColumnView col(bp.bids, l);
    int w = -1;
    for (int j = 0; j < n; ++j) {
      bool in = privatized ? bp.participates(j, l) : true;
      if (!in) continue;
      double score = privatized ? mdl.privatized_value(l, col, j) : mdl.item_value(j, l, col);
      scores[static_cast<size_t>(j)] = score;
      if (w < 0 || score > scores[static_cast<size_t>(w)]) w = j;
    }
    if (w < 0) continue;
    out.winners[static_cast<size_t>(l)] = w;
    double second = 0.0;
    for (int j = 0; j < n; ++j) {
      bool in = privatized ? bp.participates(j, l) : true;
      if (!in || j == w) continue;
      second = std::max(second, scores[static_cast<size_t>(j)]);
    }
    out.payments[static_cast<size_t>(w)] += second;
  }
  return out;
}

inline Outcome run_sim_privatized_spa(const ValuationModel& mdl, const BidProfile& bp) {
  return run_sim(mdl, bp, true);
}

inline Outcome run_mechanism(const MechanismSpec& mech, const ValuationModel& mdl, const BidProfile& bp) {
  switch (mech.kind) {
    case MechanismKind::gva:
    case MechanismKind::second_price:
    case MechanismKind::first_price:
      return run_single(mech.kind, mdl, bp);
    case MechanismKind::sim_privatized_spa:
      return run_sim(mdl, bp, true);
    case MechanismKind::sim_second_price_mandatory:
      return run_sim(mdl, bp, false);
    default:
      throw std::invalid_argument("run_mechanism: randomized mechanisms have no deterministic outcome");
  }
}

// ---- utilities ----------------------------------------------------------------

/// Unit-demand value of the won set at the true signals.
inline double won_value(const ValuationModel& mdl, const Outcome& o, const SignalProfile& true_s, int agent) {
  double best = 0.0;
  bool any = false;
  for (int l = 0; l < static_cast<int>(o.winners.size()); ++l) {
    if (!o.winners[static_cast<size_t>(l)] || *o.winners[static_cast<size_t>(l)] != agent) continue;
    any = true;
    best = std::max(best, mdl.item_value(agent, l, ColumnView(true_s, l)));
  }
  return any ? best : 0.0;
}

/// u_i(b, s): allocation value at the true signals minus payment at the bids.
/// Randomized mechanisms (RSV, proportional, mixtures) return exact expected
/// utility; mixture utilities are affine in eps.
inline double utility(const MechanismSpec& mech, const ValuationModel& mdl, const BidProfile& bp,
                      const SignalProfile& true_s, int agent) {
  switch (mech.kind) {
    case MechanismKind::gva:
    case MechanismKind::second_price:
    case MechanismKind::first_price: {
      // losers pay nothing; skip the payment computation for them
      int w = single_winner(mdl, bp.bids);
      if (w != agent) return 0.0;
      double pay = 0.0;
      if (mech.kind == MechanismKind::gva) {
        CriticalBid cb = critical_bid(mdl, w, bp.bids);
        double crit = bp.bids.at(w);
        if (cb.exists) crit = std::min(crit, cb.bid);
        SignalProfile at = bp.bids;
        at.at(w) = crit;
        pay = std::max(0.0, mdl.value(w, at));
      } else if (mech.kind == MechanismKind::second_price) {
        for (int j = 0; j < mdl.agents(); ++j)
          if (j != w) pay = std::max(pay, mdl.value(j, bp.bids));
      } else {
        pay = mdl.value(w, bp.bids);
      }
      return mdl.value(agent, true_s) - pay;
    }
    case MechanismKind::random_sampling_vickrey:
      return rsv_expected_utility(mdl, bp, true_s, agent);
    case MechanismKind::proportional: {
      std::vector<double> probs = run_proportional(bp.bids);
      return probs[static_cast<size_t>(agent)] * mdl.value(agent, true_s);
    }
    case MechanismKind::mixture: {
      MechanismSpec inner = MechanismSpec::of(mech.inner);
      double ui = utility(inner, mdl, bp, true_s, agent);
      std::vector<double> probs = run_proportional(bp.bids);
      return (1.0 - mech.eps) * ui + mech.eps * probs[static_cast<size_t>(agent)] * mdl.value(agent, true_s);
    }
    case MechanismKind::sim_privatized_spa:
    case MechanismKind::sim_second_price_mandatory: {
      Outcome o = run_sim(mdl, bp, mech.kind == MechanismKind::sim_privatized_spa);
      return won_value(mdl, o, true_s, agent) - o.payments[static_cast<size_t>(agent)];
    }
  }
  throw std::logic_error("utility: unknown mechanism");
}

/// Realized welfare of an outcome at the true signals (unit-demand for
/// multi-item models).
inline double outcome_welfare(const ValuationModel& mdl, const Outcome& o, const SignalProfile& true_s) {
  if (!mdl.multi_item()) {
    if (!o.winners.empty() && o.winners[0]) return mdl.value(*o.winners[0], true_s);
    return 0.0;
  }
  double w = 0.0;
  for (int i = 0; i < mdl.agents(); ++i) w += won_value(mdl, o, true_s, i);
  return w;
}

/// Expected welfare at the true signals; exact for the randomized mechanisms.
inline double expected_welfare(const MechanismSpec& mech, const ValuationModel& mdl, const BidProfile& bp,
                               const SignalProfile& true_s) {
  switch (mech.kind) {
    case MechanismKind::gva:
    case MechanismKind::second_price:
    case MechanismKind::first_price:
    case MechanismKind::sim_privatized_spa:
    case MechanismKind::sim_second_price_mandatory:
      return outcome_welfare(mdl, run_mechanism(mech, mdl, bp), true_s);
    case MechanismKind::random_sampling_vickrey:
      return rsv_expectation(mdl, bp, true_s).expected_welfare;
    case MechanismKind::proportional: {
      std::vector<double> probs = run_proportional(bp.bids);
      double w = 0.0;
      for (int i = 0; i < mdl.agents(); ++i) w += probs[static_cast<size_t>(i)] * mdl.value(i, true_s);
      return w;
    }
    case MechanismKind::mixture: {
      double inner = expected_welfare(MechanismSpec::of(mech.inner), mdl, bp, true_s);
      std::vector<double> probs = run_proportional(bp.bids);
      double prop = 0.0;
      for (int i = 0; i < mdl.agents(); ++i) prop += probs[static_cast<size_t>(i)] * mdl.value(i, true_s);
      return (1.0 - mech.eps) * inner + mech.eps * prop;
    }
  }
  throw std::logic_error("expected_welfare: unknown mechanism");
}

}  // namespace iva
