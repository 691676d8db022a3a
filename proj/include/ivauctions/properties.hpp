#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ivauctions/parallel.hpp"
#include "ivauctions/rng.hpp"
#include "ivauctions/signal.hpp"
#include "ivauctions/valuation.hpp"

namespace iva {

struct Witness {
  bool valid = false;
  std::vector<int> agents;     // the quantified agent indices, in definition order
  int item = -1;               // multi-item only
  std::vector<double> signal;  // the column (multi) or full profile (single) at the violation
  std::vector<double> delta;   // per-coordinate increment applied
};

struct PropertyReport {
  std::string property;
  bool pass = true;
  double margin = kInf;    // min slack over all tested tuples; negative = violation
  double estimate = 0.0;   // gamma / c estimators only
  Witness witness;
  uint64_t tuples_checked = 0;
  bool sampled = false;    // grid cross-product exceeded the budget; seeded sampling used
  std::string note;
};

inline double value_of(const ValuationModel& mdl, int agent, int item, const std::vector<double>& col);
inline Witness make_witness(std::vector<int> agents, int item, const std::vector<double>& col, int mover,
                            double d, int n);
inline std::vector<std::vector<double>> delta_vectors(const ValuationModel& mdl, int item,
                                                      const std::vector<double>& col, int i);
namespace detail {
struct RatioAcc;
}
inline void finish_ratio_report(PropertyReport& rep, const detail::RatioAcc& acc, double estimate,
                                std::optional<double> declared, double tol);

/// Delta set used by every grid checker: one grid step, a quarter of the
/// range, and half of the range (duplicates and zero removed).
inline std::vector<double> default_deltas(const SignalSpace& sp) {
  std::vector<double> d;
  if (sp.is_singleton()) return d;
  double range = sp.hi - sp.lo;
  for (double cand : {sp.step_size(), range / 4.0, range / 2.0}) {
    if (cand <= 0.0) continue;
    bool dup = false;
    for (double x : d) dup = dup || std::abs(x - cand) < 1e-15;
    if (!dup) d.push_back(cand);
  }
  std::sort(d.begin(), d.end());
  return d;
}

namespace detail {

/// Enumerates (item, grid column) tuples in lexicographic (item-major) order,
/// falling back to seeded sampling when the cross-product exceeds the
/// evaluation budget. per_tuple must be safe to call concurrently with
/// distinct accumulators; accumulators are merged in chunk order so results
/// do not depend on the partitioning.
template <typename Acc>
void scan_columns(const ValuationModel& mdl, uint64_t evals_per_tuple, uint64_t max_evals, uint64_t seed,
                  int threads, bool& sampled_out, uint64_t& tuples_out,
                  const std::function<void(Acc&, int item, const std::vector<double>& col, uint64_t rank)>& per_tuple,
                  const std::function<void(Acc&, const Acc&)>& merge, Acc& acc) {
  int n = mdl.agents();
  int items = mdl.multi_item() ? mdl.items() : 1;
  std::vector<int> sizes(static_cast<size_t>(n));
  // Identical per-item spaces are the common case; budget from item 0.
  uint64_t per_item = 1;
  for (int i = 0; i < n; ++i) {
    sizes[static_cast<size_t>(i)] = mdl.space(i, 0).point_count();
    per_item *= static_cast<uint64_t>(sizes[static_cast<size_t>(i)]);
  }
  uint64_t total = per_item * static_cast<uint64_t>(items);
  if (evals_per_tuple == 0) evals_per_tuple = 1;

  auto tuple_at = [&](uint64_t rank, int& item, std::vector<int>& idx) {
    item = static_cast<int>(rank / per_item);
    uint64_t r = rank % per_item;
    for (int d = n - 1; d >= 0; --d) {
      idx[static_cast<size_t>(d)] = static_cast<int>(r % static_cast<uint64_t>(sizes[static_cast<size_t>(d)]));
      r /= static_cast<uint64_t>(sizes[static_cast<size_t>(d)]);
    }
  };
  auto run_tuple = [&](Acc& a, uint64_t rank, std::vector<int>& idx, std::vector<double>& col) {
    int item = 0;
    tuple_at(rank, item, idx);
    for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = mdl.space(i, item).point(idx[static_cast<size_t>(i)]);
    per_tuple(a, item, col, rank);
  };

  bool sample = total * evals_per_tuple > max_evals;
  uint64_t work = sample ? std::max<uint64_t>(1, max_evals / (10 * evals_per_tuple)) : total;
  sampled_out = sample;
  tuples_out = work;

  std::vector<Acc> partial;
  std::mutex mu;
  parallel_chunks(work, threads, [&](int chunk, uint64_t begin, uint64_t end) {
    Acc local{};
    std::vector<int> idx(static_cast<size_t>(n));
    std::vector<double> col(static_cast<size_t>(n));
    for (uint64_t w = begin; w < end; ++w) {
      uint64_t rank;
      if (sample) {
        Rng r = Rng::substream(seed, w);
        rank = r.bits() % total;
      } else {
        rank = w;
      }
      run_tuple(local, rank, idx, col);
    }
    std::lock_guard<std::mutex> lock(mu);
    if (partial.size() <= static_cast<size_t>(chunk)) partial.resize(static_cast<size_t>(chunk) + 1);
    partial[static_cast<size_t>(chunk)] = std::move(local);
  });
  for (const Acc& p : partial) merge(acc, p);
}

struct RatioAcc {
  double sup = 0.0;
  uint64_t sup_rank = UINT64_MAX;
  Witness sup_witness;
  bool monotone_violation = false;
  uint64_t viol_rank = UINT64_MAX;
  Witness viol_witness;
};

inline void merge_ratio(RatioAcc& a, const RatioAcc& b) {
  if (b.sup > a.sup || (b.sup == a.sup && b.sup_rank < a.sup_rank)) {
    a.sup = b.sup;
    a.sup_rank = b.sup_rank;
    a.sup_witness = b.sup_witness;
  }
  if (b.monotone_violation && (!a.monotone_violation || b.viol_rank < a.viol_rank)) {
    a.monotone_violation = true;
    a.viol_rank = b.viol_rank;
    a.viol_witness = b.viol_witness;
  }
}

struct SlackAcc {
  double min_slack = kInf;
  bool violated = false;
  uint64_t viol_rank = UINT64_MAX;
  Witness viol_witness;
  // strict own-signal monotonicity is tracked separately from weak slack
  bool strict_violation = false;
};

inline void merge_slack(SlackAcc& a, const SlackAcc& b) {
  a.min_slack = std::min(a.min_slack, b.min_slack);
  a.strict_violation = a.strict_violation || b.strict_violation;
  if (b.violated && (!a.violated || b.viol_rank < a.viol_rank)) {
    a.violated = true;
    a.viol_rank = b.viol_rank;
    a.viol_witness = b.viol_witness;
  }
}

}  // namespace detail

struct CheckOptions {
  double tol = 1e-9;
  uint64_t max_evals = 10'000'000;
  uint64_t seed = 0;
  int threads = 0;                   // 0 = default
  std::vector<double> deltas;        // empty = default set per coordinate
};

inline std::vector<double> deltas_for(const SignalSpace& sp, const CheckOptions& opt) {
  if (opt.deltas.empty()) return default_deltas(sp);
  std::vector<double> d;
  for (double x : opt.deltas)
    if (x > 0.0 && x <= sp.hi - sp.lo) d.push_back(x);
  return d;
}

/// Minimal c-hat such that chat * (v_i(s_i + d, s_-i) - v_i(s)) >=
/// v_i'(s_i + d, s_-i) - v_i'(s) over the grid, agents i != i', and the
/// default delta set. 0/0 counts as satisfied; positive/0 is +inf with a
/// witness (a strict-monotonicity violation in the mover's own value).
inline PropertyReport estimate_c(const ValuationModel& mdl, const CheckOptions& opt = {}) {
  int n = mdl.agents();
  PropertyReport rep;
  rep.property = "c_single_crossing";
  detail::RatioAcc acc;
  uint64_t evals_per_tuple = static_cast<uint64_t>(n) * 3 * static_cast<uint64_t>(n + 1);
  std::function<void(detail::RatioAcc&, int, const std::vector<double>&, uint64_t)> body =
      [&](detail::RatioAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
        std::vector<double> bumped = col;
        for (int i = 0; i < n; ++i) {
          const SignalSpace& sp = mdl.space(i, item);
          for (double d : deltas_for(sp, opt)) {
            if (col[static_cast<size_t>(i)] + d > sp.hi + 1e-12) continue;
            bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)] + d;
            double own = value_of(mdl, i, item, bumped) - value_of(mdl, i, item, col);
            for (int ip = 0; ip < n; ++ip) {
              if (ip == i) continue;
              double cross = value_of(mdl, ip, item, bumped) - value_of(mdl, ip, item, col);
              if (cross <= 1e-12) continue;  // inequality holds for any c >= 1
              if (own <= 1e-12) {
                if (!a.monotone_violation || rank < a.viol_rank) {
                  a.monotone_violation = true;
                  a.viol_rank = rank;
                  a.viol_witness = make_witness({i, ip}, item, col, i, d, n);
                }
                continue;
              }
              double ratio = cross / own;
              if (ratio > a.sup || (ratio == a.sup && rank < a.sup_rank)) {
                a.sup = ratio;
                a.sup_rank = rank;
                a.sup_witness = make_witness({i, ip}, item, col, i, d, n);
              }
            }
            bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)];
          }
        }
      };
  std::function<void(detail::RatioAcc&, const detail::RatioAcc&)> merge = detail::merge_ratio;
  detail::scan_columns<detail::RatioAcc>(mdl, evals_per_tuple, opt.max_evals, opt.seed, opt.threads,
                                         rep.sampled, rep.tuples_checked, body, merge, acc);
  finish_ratio_report(rep, acc, std::max(1.0, acc.sup), mdl.declared_c(), opt.tol);
  return rep;
}

/// Minimal gamma-hat bounding, for every mover i and two other agents j, j',
/// the ratio of the induced value changes. Clamped at 1 from below.
inline PropertyReport estimate_gamma(const ValuationModel& mdl, const CheckOptions& opt = {}) {
  int n = mdl.agents();
  PropertyReport rep;
  rep.property = "gamma_heterogeneity";
  detail::RatioAcc acc;
  uint64_t evals_per_tuple = static_cast<uint64_t>(n) * 3 * static_cast<uint64_t>(n + 1);
  std::function<void(detail::RatioAcc&, int, const std::vector<double>&, uint64_t)> body =
      [&](detail::RatioAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
        if (n < 3) return;
        std::vector<double> bumped = col;
        std::vector<double> diff(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
          const SignalSpace& sp = mdl.space(i, item);
          for (double d : deltas_for(sp, opt)) {
            if (col[static_cast<size_t>(i)] + d > sp.hi + 1e-12) continue;
            bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)] + d;
            for (int j = 0; j < n; ++j)
              diff[static_cast<size_t>(j)] = value_of(mdl, j, item, bumped) - value_of(mdl, j, item, col);
            for (int j = 0; j < n; ++j) {
              if (j == i) continue;
              for (int jp = 0; jp < n; ++jp) {
                if (jp == i || jp == j) continue;
                double num = diff[static_cast<size_t>(jp)];
                double den = diff[static_cast<size_t>(j)];
                if (num <= 1e-12) continue;
                if (den <= 1e-12) {
                  if (!a.monotone_violation || rank < a.viol_rank) {
                    a.monotone_violation = true;
                    a.viol_rank = rank;
                    a.viol_witness = make_witness({i, j, jp}, item, col, i, d, n);
                  }
                  continue;
                }
                double ratio = num / den;
                if (ratio > a.sup || (ratio == a.sup && rank < a.sup_rank)) {
                  a.sup = ratio;
                  a.sup_rank = rank;
                  a.sup_witness = make_witness({i, j, jp}, item, col, i, d, n);
                }
              }
            }
            bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)];
          }
        }
      };
  std::function<void(detail::RatioAcc&, const detail::RatioAcc&)> merge = detail::merge_ratio;
  detail::scan_columns<detail::RatioAcc>(mdl, evals_per_tuple, opt.max_evals, opt.seed, opt.threads,
                                         rep.sampled, rep.tuples_checked, body, merge, acc);
  finish_ratio_report(rep, acc, std::max(1.0, acc.sup), mdl.declared_gamma(), opt.tol);
  return rep;
}

enum class ValuationProperty { monotone, homogeneous_influence, submodular, lemma_diff_bound, corollary_ratio };

struct PropertyQuery {
  ValuationProperty property;
  double gamma = 1.0;  // lemma_diff_bound / corollary_ratio
  double c = 1.0;
  double d = 1.0;      // corollary_ratio
};

inline PropertyReport check_property(const ValuationModel& mdl, const PropertyQuery& q,
                                     const CheckOptions& opt = {}) {
  int n = mdl.agents();
  PropertyReport rep;
  detail::SlackAcc acc;
  std::function<void(detail::SlackAcc&, const detail::SlackAcc&)> merge = detail::merge_slack;
  uint64_t evals_per_tuple = static_cast<uint64_t>(n) * 4 * static_cast<uint64_t>(n);
  auto note_violation = [n](detail::SlackAcc& a, double slack, uint64_t rank, std::vector<int> agents, int item,
                            const std::vector<double>& col, const std::vector<double>& dvec) {
    a.min_slack = std::min(a.min_slack, slack);
    if (!a.violated || rank < a.viol_rank) {
      a.violated = true;
      a.viol_rank = rank;
      a.viol_witness.valid = true;
      a.viol_witness.agents = std::move(agents);
      a.viol_witness.item = item;
      a.viol_witness.signal = col;
      a.viol_witness.delta = dvec;
    }
  };

  switch (q.property) {
    case ValuationProperty::monotone: {
      rep.property = "monotone";
      std::function<void(detail::SlackAcc&, int, const std::vector<double>&, uint64_t)> body =
          [&](detail::SlackAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
            std::vector<double> bumped = col;
            for (int k = 0; k < n; ++k) {
              const SignalSpace& sp = mdl.space(k, item);
              for (double d : default_deltas(sp)) {
                if (col[static_cast<size_t>(k)] + d > sp.hi + 1e-12) continue;
                bumped[static_cast<size_t>(k)] = col[static_cast<size_t>(k)] + d;
                for (int i = 0; i < n; ++i) {
                  double diff = value_of(mdl, i, item, bumped) - value_of(mdl, i, item, col);
                  bool bad = (i == k) ? diff <= 0.0 : diff < -opt.tol;
                  a.min_slack = std::min(a.min_slack, diff);
                  if (bad) {
                    if (i == k) a.strict_violation = true;
                    std::vector<double> dv(static_cast<size_t>(n), 0.0);
                    dv[static_cast<size_t>(k)] = d;
                    note_violation(a, diff, rank, {i, k}, item, col, dv);
                  }
                }
                bumped[static_cast<size_t>(k)] = col[static_cast<size_t>(k)];
              }
            }
          };
      detail::scan_columns<detail::SlackAcc>(mdl, evals_per_tuple, opt.max_evals, opt.seed, opt.threads,
                                             rep.sampled, rep.tuples_checked, body, merge, acc);
      break;
    }
    case ValuationProperty::homogeneous_influence: {
      rep.property = "homogeneous_influence";
      std::function<void(detail::SlackAcc&, int, const std::vector<double>&, uint64_t)> body =
          [&](detail::SlackAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
            if (n < 3) return;
            std::vector<double> bumped = col;
            std::vector<double> diff(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
              const SignalSpace& sp = mdl.space(i, item);
              for (double d : default_deltas(sp)) {
                if (col[static_cast<size_t>(i)] + d > sp.hi + 1e-12) continue;
                bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)] + d;
                for (int j = 0; j < n; ++j)
                  diff[static_cast<size_t>(j)] = value_of(mdl, j, item, bumped) - value_of(mdl, j, item, col);
                for (int j = 0; j < n; ++j) {
                  if (j == i) continue;
                  for (int jp = j + 1; jp < n; ++jp) {
                    if (jp == i) continue;
                    double dev = std::abs(diff[static_cast<size_t>(j)] - diff[static_cast<size_t>(jp)]);
                    double slack = -dev;
                    a.min_slack = std::min(a.min_slack, slack);
                    if (dev > opt.tol) {
                      std::vector<double> dv(static_cast<size_t>(n), 0.0);
                      dv[static_cast<size_t>(i)] = d;
                      note_violation(a, slack, rank, {i, j, jp}, item, col, dv);
                    }
                  }
                }
                bumped[static_cast<size_t>(i)] = col[static_cast<size_t>(i)];
              }
            }
          };
      detail::scan_columns<detail::SlackAcc>(mdl, evals_per_tuple, opt.max_evals, opt.seed, opt.threads,
                                             rep.sampled, rep.tuples_checked, body, merge, acc);
      break;
    }
    case ValuationProperty::submodular: {
      // Own-signal marginal must weakly shrink as any other coordinate rises.
      // Checking single-coordinate raises suffices: dominance telescopes.
      rep.property = "submodular";
      std::function<void(detail::SlackAcc&, int, const std::vector<double>&, uint64_t)> body =
          [&](detail::SlackAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
            std::vector<double> lo = col, hi = col;
            for (int i = 0; i < n; ++i) {
              const SignalSpace& spi = mdl.space(i, item);
              for (double d : default_deltas(spi)) {
                if (col[static_cast<size_t>(i)] + d > spi.hi + 1e-12) continue;
                for (int k = 0; k < n; ++k) {
                  if (k == i) continue;
                  const SignalSpace& spk = mdl.space(k, item);
                  for (double dk : default_deltas(spk)) {
                    if (col[static_cast<size_t>(k)] + dk > spk.hi + 1e-12) continue;
                    double m_low;
                    {
                      lo[static_cast<size_t>(i)] = col[static_cast<size_t>(i)] + d;
                      m_low = value_of(mdl, i, item, lo) - value_of(mdl, i, item, col);
                      lo[static_cast<size_t>(i)] = col[static_cast<size_t>(i)];
                    }
                    double m_high;
                    {
                      hi[static_cast<size_t>(k)] = col[static_cast<size_t>(k)] + dk;
                      double base = value_of(mdl, i, item, hi);
                      hi[static_cast<size_t>(i)] = col[static_cast<size_t>(i)] + d;
                      m_high = value_of(mdl, i, item, hi) - base;
                      hi[static_cast<size_t>(i)] = col[static_cast<size_t>(i)];
                      hi[static_cast<size_t>(k)] = col[static_cast<size_t>(k)];
                    }
                    double slack = m_low - m_high;
                    a.min_slack = std::min(a.min_slack, slack);
                    if (slack < -opt.tol) {
                      std::vector<double> dv(static_cast<size_t>(n), 0.0);
                      dv[static_cast<size_t>(i)] = d;
                      dv[static_cast<size_t>(k)] = dk;
                      note_violation(a, slack, rank, {i, k}, item, col, dv);
                    }
                  }
                }
              }
            }
          };
      detail::scan_columns<detail::SlackAcc>(mdl, evals_per_tuple * 3, opt.max_evals, opt.seed, opt.threads,
                                             rep.sampled, rep.tuples_checked, body, merge, acc);
      break;
    }
    case ValuationProperty::lemma_diff_bound:
    case ValuationProperty::corollary_ratio: {
      bool lemma = q.property == ValuationProperty::lemma_diff_bound;
      rep.property = lemma ? "lemma_diff_bound" : "corollary_ratio";
      double mgc = std::max(q.gamma, q.c);
      double dd = q.d;
      std::function<void(detail::SlackAcc&, int, const std::vector<double>&, uint64_t)> body =
          [&](detail::SlackAcc& a, int item, const std::vector<double>& col, uint64_t rank) {
            for (int i = 0; i < n; ++i) {
              for (const auto& dvec : delta_vectors(mdl, item, col, i)) {
                std::vector<double> bumped = col;
                for (int k = 0; k < n; ++k) bumped[static_cast<size_t>(k)] += dvec[static_cast<size_t>(k)];
                double vi0 = value_of(mdl, i, item, col), vi1 = value_of(mdl, i, item, bumped);
                for (int j = 0; j < n; ++j) {
                  if (j == i) continue;
                  double vj0 = value_of(mdl, j, item, col), vj1 = value_of(mdl, j, item, bumped);
                  double slack;
                  if (lemma) {
                    slack = (vj1 - vj0) - (vi1 - vi0) / mgc;
                  } else {
                    if (vj0 < vi0 / dd - opt.tol) continue;  // antecedent fails
                    slack = vj1 - vi1 / dd;
                  }
                  a.min_slack = std::min(a.min_slack, slack);
                  if (slack < -opt.tol) note_violation(a, slack, rank, {i, j}, item, col, dvec);
                }
              }
            }
          };
      detail::scan_columns<detail::SlackAcc>(mdl, evals_per_tuple * 8, opt.max_evals, opt.seed, opt.threads,
                                             rep.sampled, rep.tuples_checked, body, merge, acc);
      break;
    }
  }

  rep.margin = acc.min_slack;
  rep.pass = !acc.violated;
  rep.witness = acc.viol_witness;
  return rep;
}

// ---- helpers ----------------------------------------------------------------

inline double value_of(const ValuationModel& mdl, int agent, int item, const std::vector<double>& col) {
  if (mdl.multi_item()) return mdl.item_value(agent, item, ColumnView(col));
  SignalProfile s = SignalProfile::from_vector(col);
  return mdl.value(agent, s);
}

inline Witness make_witness(std::vector<int> agents, int item, const std::vector<double>& col, int mover,
                            double d, int n) {
  Witness w;
  w.valid = true;
  w.agents = std::move(agents);
  w.item = item;
  w.signal = col;
  w.delta.assign(static_cast<size_t>(n), 0.0);
  w.delta[static_cast<size_t>(mover)] = d;
  return w;
}

inline void finish_ratio_report(PropertyReport& rep, const detail::RatioAcc& acc, double estimate,
                                std::optional<double> declared, double tol) {
  if (acc.monotone_violation) {
    rep.estimate = kInf;
    rep.pass = false;
    rep.margin = -kInf;
    rep.witness = acc.viol_witness;
    rep.note = "positive cross difference with nonpositive reference difference";
    return;
  }
  rep.estimate = estimate;
  rep.witness = acc.sup_witness;
  if (declared && std::isfinite(*declared)) {
    rep.margin = *declared - estimate;
    rep.pass = estimate <= *declared + tol;
  } else {
    rep.margin = 0.0;
    rep.pass = std::isfinite(estimate);
  }
}

/// Coordinate-wise nonnegative increments with delta_i = 0: all single-
/// coordinate deltas plus uniform-level combinations across the other
/// coordinates, capped to keep the tuple count bounded.
inline std::vector<std::vector<double>> delta_vectors(const ValuationModel& mdl, int item,
                                                      const std::vector<double>& col, int i) {
  int n = mdl.agents();
  std::vector<std::vector<double>> out;
  auto fits = [&](int k, double d) {
    return d > 0.0 && col[static_cast<size_t>(k)] + d <= mdl.space(k, item).hi + 1e-12;
  };
  for (int k = 0; k < n; ++k) {
    if (k == i) continue;
    for (double d : default_deltas(mdl.space(k, item))) {
      if (!fits(k, d)) continue;
      std::vector<double> v(static_cast<size_t>(n), 0.0);
      v[static_cast<size_t>(k)] = d;
      out.push_back(std::move(v));
    }
  }
  for (int level = 0; level < 3; ++level) {
    std::vector<double> v(static_cast<size_t>(n), 0.0);
    bool any = false;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      auto ds = default_deltas(mdl.space(k, item));
      if (static_cast<int>(ds.size()) > level && fits(k, ds[static_cast<size_t>(level)])) {
        v[static_cast<size_t>(k)] = ds[static_cast<size_t>(level)];
        any = true;
      }
    }
    if (any) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace iva
