#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "ivauctions/mechanisms.hpp"
#include "ivauctions/signal.hpp"
#include "ivauctions/valuation.hpp"

namespace iva {

/// Pure, deterministic strategy of one agent: a table from her own grid
/// signal (an m-vector in multi-item mode) to a bid row and participation
/// row. Lookups match keys to 1e-9 so grid points computed two ways agree.
class StrategyTable {
 public:
  struct Entry {
    std::vector<double> own_signal;
    std::vector<double> bid;
    std::vector<uint8_t> participation;  // empty = all ones
  };

  void add(Entry e) {
    if (e.bid.size() != e.own_signal.size())
      throw std::invalid_argument("StrategyTable: bid row must match own-signal arity");
    entries_.push_back(std::move(e));
  }

  const Entry& lookup(const std::vector<double>& own) const {
    for (const Entry& e : entries_) {
      if (e.own_signal.size() != own.size()) continue;
      bool match = true;
      for (size_t k = 0; k < own.size() && match; ++k)
        match = std::abs(e.own_signal[k] - own[k]) <= 1e-9;
      if (match) return e;
    }
    throw std::invalid_argument("StrategyTable: own signal not covered by the table");
  }

  bool covers(const std::vector<double>& own) const {
    for (const Entry& e : entries_) {
      if (e.own_signal.size() != own.size()) continue;
      bool match = true;
      for (size_t k = 0; k < own.size() && match; ++k)
        match = std::abs(e.own_signal[k] - own[k]) <= 1e-9;
      if (match) return true;
    }
    return false;
  }

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

struct StrategyProfile {
  std::vector<StrategyTable> agents;

  /// Bid profile induced at a signal profile.
  BidProfile apply(const ValuationModel& mdl, const SignalProfile& s) const {
    int n = mdl.agents(), m = mdl.multi_item() ? mdl.items() : 1;
    SignalProfile bids(n, m);
    std::vector<uint8_t> part(static_cast<size_t>(n) * static_cast<size_t>(m), 1);
    bool any_part = false;
    for (int i = 0; i < n; ++i) {
      std::vector<double> own(static_cast<size_t>(m));
      for (int l = 0; l < m; ++l) own[static_cast<size_t>(l)] = s.at(i, l);
      const StrategyTable::Entry& e = agents[static_cast<size_t>(i)].lookup(own);
      for (int l = 0; l < m; ++l) bids.at(i, l) = e.bid[static_cast<size_t>(l)];
      if (!e.participation.empty()) {
        any_part = true;
        for (int l = 0; l < m; ++l) part[static_cast<size_t>(i) * m + l] = e.participation[static_cast<size_t>(l)];
      }
    }
    if (mdl.multi_item() || any_part) return BidProfile(std::move(bids), std::move(part));
    return BidProfile(std::move(bids));
  }

  /// Truthful bidding with full participation, tabulated on the model's grid.
  static StrategyProfile truthful(const ValuationModel& mdl) {
    return tabulate(mdl, [](int, const std::vector<double>& own) { return own; });
  }

  /// Constant bid per agent (single-item helper).
  static StrategyProfile constant_single(const ValuationModel& mdl, const std::vector<double>& bids) {
    if (static_cast<int>(bids.size()) != mdl.agents())
      throw std::invalid_argument("constant_single: one bid per agent");
    return tabulate(mdl, [&](int i, const std::vector<double>&) {
      return std::vector<double>{bids[static_cast<size_t>(i)]};
    });
  }

  /// Tabulates fn(agent, own_signal) -> bid row over each agent's own grid.
  /// Multi-item own grids are enumerated per item axis, which is exponential
  /// in m; intended for the small fixtures. Use add() directly for larger
  /// tables keyed by prior support.
  template <typename Fn>
  static StrategyProfile tabulate(const ValuationModel& mdl, Fn fn) {
    int n = mdl.agents(), m = mdl.multi_item() ? mdl.items() : 1;
    StrategyProfile sp;
    sp.agents.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::vector<int> sizes(static_cast<size_t>(m));
      for (int l = 0; l < m; ++l) sizes[static_cast<size_t>(l)] = mdl.space(i, l).point_count();
      GridOdometer odo(sizes);
      do {
        std::vector<double> own(static_cast<size_t>(m));
        for (int l = 0; l < m; ++l) own[static_cast<size_t>(l)] = mdl.space(i, l).point(odo.idx[static_cast<size_t>(l)]);
        StrategyTable::Entry e;
        e.own_signal = own;
        e.bid = fn(i, own);
        sp.agents[static_cast<size_t>(i)].add(std::move(e));
      } while (odo.next());
    }
    return sp;
  }
};

/// Discrete joint distribution over signal profiles. Correlation is allowed;
/// product form and point mass are construction helpers.
struct Prior {
  std::vector<std::pair<SignalProfile, double>> atoms;

  void validate() const {
    double total = 0.0;
    for (const auto& [s, p] : atoms) {
      if (p < 0.0) throw std::invalid_argument("Prior: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("Prior: probabilities must sum to 1");
  }

  static Prior point_mass(SignalProfile s) {
    Prior pr;
    pr.atoms.emplace_back(std::move(s), 1.0);
    return pr;
  }

  /// Independent per-coordinate marginals: marginals[i][l] lists
  /// (value, probability) pairs for coordinate (i, l).
  static Prior product(int n, int m,
                       const std::vector<std::vector<std::vector<std::pair<double, double>>>>& marginals) {
    Prior pr;
    std::vector<int> sizes;
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l)
        sizes.push_back(static_cast<int>(marginals[static_cast<size_t>(i)][static_cast<size_t>(l)].size()));
    GridOdometer odo(sizes);
    do {
      SignalProfile s(n, m);
      double p = 1.0;
      int d = 0;
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < m; ++l, ++d) {
          const auto& [val, prob] = marginals[static_cast<size_t>(i)][static_cast<size_t>(l)]
                                             [static_cast<size_t>(odo.idx[static_cast<size_t>(d)])];
          s.at(i, l) = val;
          p *= prob;
        }
      if (p > 0.0) pr.atoms.emplace_back(std::move(s), p);
    } while (odo.next());
    return pr;
  }

  /// Uniform over an agent's own grid, every other coordinate pinned; used by
  /// fixtures where one signal drives the instance.
  static Prior uniform_own_grid(const ValuationModel& mdl, int agent, const SignalProfile& base,
                                bool tie_items_together = true) {
    Prior pr;
    int m = mdl.multi_item() ? mdl.items() : 1;
    const SignalSpace& sp = mdl.space(agent, 0);
    double p = 1.0 / static_cast<double>(sp.point_count());
    for (int k = 0; k < sp.point_count(); ++k) {
      SignalProfile s = base;
      for (int l = 0; l < m; ++l) s.at(agent, l) = tie_items_together ? sp.point(k) : sp.point(k);
      pr.atoms.emplace_back(std::move(s), p);
    }
    return pr;
  }

  double expect(const std::function<double(const SignalProfile&)>& f) const {
    double acc = 0.0;
    for (const auto& [s, p] : atoms) acc += p * f(s);
    return acc;
  }
};

}  // namespace iva
