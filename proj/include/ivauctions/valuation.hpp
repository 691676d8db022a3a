#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivauctions/signal.hpp"

namespace iva {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family {
  linear_weighted,
  resale_style,
  wallet_game,
  common_value,
  sine_pair,
  bad_example1,
  bad_example2,
  lower_bound_case1,
  lower_bound_case2,
  rsv_example,
  balls_and_bins,
  product_cross,
  tilde_opt_far,
  weighted_sum,
  participation_necessity,
  custom,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::linear_weighted: return "linear_weighted";
    case Family::resale_style: return "resale_style";
    case Family::wallet_game: return "wallet_game";
    case Family::common_value: return "common_value";
    case Family::sine_pair: return "sine_pair";
    case Family::bad_example1: return "bad_example1";
    case Family::bad_example2: return "bad_example2";
    case Family::lower_bound_case1: return "lower_bound_case1";
    case Family::lower_bound_case2: return "lower_bound_case2";
    case Family::rsv_example: return "rsv_example";
    case Family::balls_and_bins: return "balls_and_bins";
    case Family::product_cross: return "product_cross";
    case Family::tilde_opt_far: return "tilde_opt_far";
    case Family::weighted_sum: return "weighted_sum";
    case Family::participation_necessity: return "participation_necessity";
    case Family::custom: return "custom";
  }
  return "?";
}

inline std::optional<Family> family_from_name(const std::string& s) {
  static const std::pair<const char*, Family> table[] = {
      {"linear_weighted", Family::linear_weighted},
      {"resale_style", Family::resale_style},
      {"wallet_game", Family::wallet_game},
      {"common_value", Family::common_value},
      {"sine_pair", Family::sine_pair},
      {"bad_example1", Family::bad_example1},
      {"bad_example2", Family::bad_example2},
      {"lower_bound_case1", Family::lower_bound_case1},
      {"lower_bound_case2", Family::lower_bound_case2},
      {"rsv_example", Family::rsv_example},
      {"balls_and_bins", Family::balls_and_bins},
      {"product_cross", Family::product_cross},
      {"tilde_opt_far", Family::tilde_opt_far},
      {"weighted_sum", Family::weighted_sum},
      {"participation_necessity", Family::participation_necessity},
      {"custom", Family::custom},
  };
  for (const auto& [name, fam] : table)
    if (s == name) return fam;
  return std::nullopt;
}

/// Family parameters. Only the fields a family uses are read; the scenario
/// loader validates presence and shape.
struct FamilyParams {
  double beta = 1.0;
  double gamma = 1.0;
  double c = 1.0;
  double eps = 0.0;
  double alpha = 0.5;
  double offset = 0.0;
  std::vector<std::vector<double>> W;      // linear_weighted: n x n, row i = agent i's slopes
  std::vector<double> offsets;             // linear_weighted: per-agent intercept
  std::vector<double> weights;             // common_value: shared slopes
  std::vector<std::vector<double>> table;  // custom: per agent, values over the grid cross-product
};

/// Publicly known valuation profile v. Single-item mode: v_i maps the
/// n-signal vector to a value; multi-item mode: v_{il} maps item l's signal
/// column to a value, and an agent's value for a set is the max over the set
/// (unit demand). Values are weakly increasing in every coordinate and
/// strictly increasing in the agent's own coordinate, except where a
/// counterexample family deliberately breaks a property.
class ValuationModel {
 public:
  ValuationModel() = default;

  Family family() const { return family_; }
  const FamilyParams& params() const { return params_; }
  bool multi_item() const { return m_ > 1 || multi_flag_; }
  int agents() const { return n_; }
  int items() const { return m_; }

  const SignalSpace& space(int agent, int item = 0) const {
    check_agent(agent);
    return spaces_[static_cast<size_t>(agent) * static_cast<size_t>(m_) + static_cast<size_t>(item)];
  }
  void set_space(int agent, int item, const SignalSpace& sp) {
    spaces_[static_cast<size_t>(agent) * static_cast<size_t>(m_) + static_cast<size_t>(item)] = sp;
  }
  void set_grid_steps(int steps) {
    for (auto& sp : spaces_)
      if (!sp.is_singleton()) sp = SignalSpace(sp.lo, sp.hi, steps);
  }

  /// Declared heterogeneity / single-crossing parameters, when the family is
  /// simple enough to know them in closed form. Estimators cross-check these.
  std::optional<double> declared_gamma() const { return declared_gamma_; }
  std::optional<double> declared_c() const { return declared_c_; }

  /// v_i(s) for single-item models. s must have m == 1.
  double value(int agent, const SignalProfile& s) const {
    if (multi_item()) throw std::domain_error("value: model is multi-item, pass an item index");
    if (s.n != n_ || s.m != 1) throw std::invalid_argument("value: profile shape mismatch");
    check_agent(agent);
    check_domain(s);
    return value_raw(agent, s.data.data(), 1);
  }

  /// v_{il}(s_l) for multi-item models, evaluated on item l's signal column.
  double item_value(int agent, int item, ColumnView col) const {
    if (!multi_item()) throw std::domain_error("item_value: model is single-item");
    check_agent(agent);
    check_item(item);
    if (col.n != n_) throw std::invalid_argument("item_value: column length mismatch");
    return item_value_raw(agent, item, col);
  }

  double eval(int agent, const SignalProfile& s, std::optional<int> item = std::nullopt) const {
    if (multi_item()) {
      if (!item) throw std::invalid_argument("eval: multi-item model needs an item index");
      if (s.n != n_ || s.m != m_) throw std::invalid_argument("eval: profile shape mismatch");
      check_domain(s);
      return item_value(agent, *item, ColumnView(s, *item));
    }
    if (item && *item != 0) throw std::invalid_argument("eval: single-item model, item must be absent or 0");
    return value(agent, s);
  }

  /// Privatized value: agent's per-item value with every other signal zeroed,
  /// evaluated at her own entry of the bid column.
  double privatized_value(int item, ColumnView bids_col, int agent) const {
    if (!multi_item()) throw std::domain_error("privatized_value: single-item model");
    check_agent(agent);
    check_item(item);
    std::vector<double> z(static_cast<size_t>(n_), 0.0);
    z[static_cast<size_t>(agent)] = bids_col[agent];
    return item_value_raw(agent, item, ColumnView(z));
  }

  /// Truncated value: min over zeroing exactly one other agent's signal.
  /// Reconstructed definition (flagged as such in reports); it is the form
  /// consistent with the covering lemma's proof. Requires n >= 2.
  double truncated_value(int item, ColumnView signals_col, int agent) const {
    if (!multi_item()) throw std::domain_error("truncated_value: single-item model");
    if (n_ < 2) throw std::domain_error("truncated_value: needs at least two agents");
    check_agent(agent);
    check_item(item);
    std::vector<double> col = signals_col.to_vector();
    double best = kInf;
    for (int k = 0; k < n_; ++k) {
      if (k == agent) continue;
      double saved = col[static_cast<size_t>(k)];
      col[static_cast<size_t>(k)] = 0.0;
      best = std::min(best, item_value_raw(agent, item, ColumnView(col)));
      col[static_cast<size_t>(k)] = saved;
    }
    return best;
  }

  // ---- catalog constructors -------------------------------------------------

  static ValuationModel linear_weighted(std::vector<std::vector<double>> W, std::vector<double> offsets,
                                        SignalSpace sp = SignalSpace(0, 1, 64), int items = 1) {
    int n = static_cast<int>(W.size());
    if (n == 0) throw std::invalid_argument("linear_weighted: empty weight matrix");
    for (const auto& row : W)
      if (static_cast<int>(row.size()) != n) throw std::invalid_argument("linear_weighted: W must be n x n");
    if (offsets.empty()) offsets.assign(static_cast<size_t>(n), 0.0);
    if (static_cast<int>(offsets.size()) != n) throw std::invalid_argument("linear_weighted: offsets size mismatch");
    ValuationModel mdl(Family::linear_weighted, n, items, items > 1, sp);
    mdl.params_.W = std::move(W);
    mdl.params_.offsets = std::move(offsets);
    mdl.declared_gamma_ = linear_gamma(mdl.params_.W);
    mdl.declared_c_ = linear_c(mdl.params_.W);
    return mdl;
  }

  static ValuationModel resale_style(int n, double alpha = 0.5, SignalSpace sp = SignalSpace(0, 1, 64)) {
    ValuationModel mdl(Family::resale_style, n, 1, false, sp);
    mdl.params_.alpha = alpha;
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel wallet_game(int n, SignalSpace sp = SignalSpace(0, 1, 64)) {
    ValuationModel mdl(Family::wallet_game, n, 1, false, sp);
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel common_value(int n, std::vector<double> weights = {}, double offset = 0.0,
                                     SignalSpace sp = SignalSpace(0, 1, 64)) {
    if (weights.empty()) weights.assign(static_cast<size_t>(n), 1.0);
    if (static_cast<int>(weights.size()) != n) throw std::invalid_argument("common_value: weights size mismatch");
    ValuationModel mdl(Family::common_value, n, 1, false, sp);
    mdl.params_.weights = std::move(weights);
    mdl.params_.offset = offset;
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel sine_pair(int steps = 64) {
    ValuationModel mdl(Family::sine_pair, 2, 1, false, SignalSpace(0, 3 * std::numbers::pi, steps));
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 3.0;
    return mdl;
  }

  static ValuationModel bad_example1(int n, double eps, int steps = 64) {
    if (n < 3) throw std::invalid_argument("bad_example1: needs n >= 3");
    ValuationModel mdl(Family::bad_example1, n, 1, false, SignalSpace(0, 1, steps));
    mdl.params_.eps = eps;
    mdl.set_space(0, 0, SignalSpace::singleton(1.0));
    mdl.set_space(1, 0, SignalSpace::singleton(1.0));
    mdl.declared_c_ = 1.0;  // heterogeneity is unbounded here, by construction
    return mdl;
  }

  static ValuationModel bad_example2(int n, double eps, int steps = 64) {
    if (n < 3) throw std::invalid_argument("bad_example2: needs n >= 3");
    ValuationModel mdl(Family::bad_example2, n, 1, false, SignalSpace(0, 1, steps));
    mdl.params_.eps = eps;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel lower_bound_case1(double beta, double c, double eps, int steps = 64) {
    ValuationModel mdl(Family::lower_bound_case1, 3, 1, false, SignalSpace(0, 1, steps));
    mdl.params_.beta = beta;
    mdl.params_.c = c;
    mdl.params_.eps = eps;
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = c;
    return mdl;
  }

  static ValuationModel lower_bound_case2(double beta, double gamma, double eps, int steps = 64) {
    ValuationModel mdl(Family::lower_bound_case2, 3, 1, false, SignalSpace(0, 1, steps));
    mdl.params_.beta = beta;
    mdl.params_.gamma = gamma;
    mdl.params_.eps = eps;
    mdl.declared_gamma_ = gamma;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel rsv_example(int n, double c, int steps = 64) {
    if (n < 2) throw std::invalid_argument("rsv_example: needs n >= 2");
    ValuationModel mdl(Family::rsv_example, n, 1, false, SignalSpace(0, 1, steps));
    mdl.params_.c = c;
    return mdl;  // no SC: agent 0's cross influence is c, own slope 1
  }

  static ValuationModel balls_and_bins(int n, int steps = 1) {
    ValuationModel mdl(Family::balls_and_bins, n, n * n, true, SignalSpace(0, 1, steps));
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel product_cross(int items = 1, int steps = 64) {
    // Shared formula s_0*s_1 + s_0*s_2 for all three agents: the submodularity
    // counterexample. gamma/c are left undeclared; checks take them as inputs.
    return ValuationModel(Family::product_cross, 3, items, true, SignalSpace(0, 1, steps));
  }

  static ValuationModel tilde_opt_far(int n, int m, double eps, int steps = 64) {
    if (n < m || m < 1) throw std::invalid_argument("tilde_opt_far: needs n >= m >= 1");
    ValuationModel mdl(Family::tilde_opt_far, n, m, true, SignalSpace(0, 1, steps));
    mdl.params_.eps = eps;
    for (int i = 1; i < n; ++i)
      for (int l = 0; l < m; ++l) mdl.set_space(i, l, SignalSpace::singleton(0.0));
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  static ValuationModel weighted_sum(int n, double beta, double hi = 50.0, int steps = 64) {
    if (n < 2) throw std::invalid_argument("weighted_sum: needs n >= 2");
    ValuationModel mdl(Family::weighted_sum, n, n, true, SignalSpace(0, hi, steps));
    mdl.params_.beta = beta;
    mdl.declared_gamma_ = 2.0;
    mdl.declared_c_ = 2.0;
    return mdl;
  }

  static ValuationModel participation_necessity(int n, int m, int steps = 64) {
    ValuationModel mdl(Family::participation_necessity, n, m, true, SignalSpace(0, 1, steps));
    mdl.declared_gamma_ = 1.0;
    mdl.declared_c_ = 1.0;
    return mdl;
  }

  /// Single-item tabulated valuations over the grid cross-product, evaluated
  /// off-grid by multilinear interpolation. table[i] lists agent i's values
  /// in odometer order over (space_0 grid) x ... x (space_{n-1} grid).
  static ValuationModel custom(std::vector<SignalSpace> spaces, std::vector<std::vector<double>> table) {
    int n = static_cast<int>(spaces.size());
    if (n == 0 || static_cast<int>(table.size()) != n)
      throw std::invalid_argument("custom: need one table per agent");
    size_t cells = 1;
    for (const auto& sp : spaces) cells *= static_cast<size_t>(sp.point_count());
    for (const auto& t : table)
      if (t.size() != cells) throw std::invalid_argument("custom: table size must match grid cross-product");
    ValuationModel mdl(Family::custom, n, 1, false, SignalSpace(0, 1, 1));
    for (int i = 0; i < n; ++i) mdl.set_space(i, 0, spaces[static_cast<size_t>(i)]);
    mdl.params_.table = std::move(table);
    return mdl;
  }

  static std::optional<double> linear_gamma(const std::vector<std::vector<double>>& W) {
    int n = static_cast<int>(W.size());
    double g = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        for (int jp = 0; jp < n; ++jp) {
          if (jp == i || jp == j) continue;
          double den = W[static_cast<size_t>(j)][static_cast<size_t>(i)];
          double num = W[static_cast<size_t>(jp)][static_cast<size_t>(i)];
          if (num <= 0.0) continue;
          if (den <= 0.0) return kInf;
          g = std::max(g, num / den);
        }
      }
    return g;
  }

  static std::optional<double> linear_c(const std::vector<std::vector<double>>& W) {
    int n = static_cast<int>(W.size());
    double c = 1.0;
    for (int i = 0; i < n; ++i)
      for (int ip = 0; ip < n; ++ip) {
        if (ip == i) continue;
        double num = W[static_cast<size_t>(ip)][static_cast<size_t>(i)];
        double den = W[static_cast<size_t>(i)][static_cast<size_t>(i)];
        if (num <= 0.0) continue;
        if (den <= 0.0) return kInf;
        c = std::max(c, num / den);
      }
    return c;
  }

 private:
  ValuationModel(Family f, int n, int m, bool multi, const SignalSpace& sp)
      : family_(f), n_(n), m_(m), multi_flag_(multi),
        spaces_(static_cast<size_t>(n) * static_cast<size_t>(m), sp) {
    if (n <= 0 || m <= 0) throw std::invalid_argument("ValuationModel: n, m must be positive");
  }

  void check_agent(int agent) const {
    if (agent < 0 || agent >= n_) throw std::out_of_range("agent index out of range");
  }
  void check_item(int item) const {
    if (item < 0 || item >= m_) throw std::out_of_range("item index out of range");
  }
  void check_domain(const SignalProfile& s) const {
    for (int i = 0; i < n_; ++i)
      for (int l = 0; l < s.m; ++l)
        if (!space(i, l).contains(s.at(i, l)))
          throw std::domain_error("signal outside declared space at agent " + std::to_string(i));
  }

  double value_raw(int agent, const double* s, int stride) const {
    ColumnView col;
    col.base = s;
    col.stride = stride;
    col.n = n_;
    return formula(agent, col);
  }

  double item_value_raw(int agent, int /*item*/, ColumnView col) const { return formula(agent, col); }

  double formula(int i, ColumnView s) const {
    switch (family_) {
      case Family::linear_weighted: {
        double v = params_.offsets[static_cast<size_t>(i)];
        const auto& row = params_.W[static_cast<size_t>(i)];
        for (int j = 0; j < n_; ++j) v += row[static_cast<size_t>(j)] * s[j];
        return v;
      }
      case Family::resale_style: {
        double mx = s[0];
        for (int j = 1; j < n_; ++j) mx = std::max(mx, s[j]);
        return s[i] + params_.alpha * mx;
      }
      case Family::wallet_game: {
        double t = 0.0;
        for (int j = 0; j < n_; ++j) t += s[j];
        return t;
      }
      case Family::common_value: {
        double v = params_.offset;
        for (int j = 0; j < n_; ++j) v += params_.weights[static_cast<size_t>(j)] * s[j];
        return v;
      }
      case Family::sine_pair: {
        double t = s[0] + s[1];
        return i == 0 ? std::sin(t) + 2.0 * t : std::sin(t + std::numbers::pi) + 2.0 * t;
      }
      case Family::bad_example1: {
        if (i == 0) {
          double t = params_.eps;
          for (int j = 0; j < n_; ++j) t += s[j];
          return t;
        }
        if (i == 1) return 2.0 * (s[1] + params_.eps);
        return s[i];
      }
      case Family::bad_example2: {
        if (i == 0) {
          double t = params_.eps;
          for (int j = 0; j < n_; ++j) t += s[j];
          return t;
        }
        if (i == 1) return std::sqrt(static_cast<double>(n_)) * s[1];
        return s[i];
      }
      case Family::lower_bound_case1: {
        if (i == 0) return params_.beta * s[0] + 1.0;
        return params_.c * params_.beta * s[0] + params_.eps * s[i];
      }
      case Family::lower_bound_case2: {
        if (i == 0) return params_.gamma * params_.beta * s[0];
        if (i == 1) return params_.beta * s[0] + s[1];
        return params_.gamma * params_.beta * s[0] + params_.eps * s[2];
      }
      case Family::rsv_example: {
        if (i == 0) {
          double t = s[0];
          for (int j = 1; j < n_; ++j) t += params_.c * s[j];
          return t;
        }
        return s[i] + 2.0 * static_cast<double>(i + 1);
      }
      case Family::balls_and_bins: {
        double t = 1.0;
        for (int j = 0; j < n_; ++j) t += s[j];
        return t;
      }
      case Family::product_cross:
        return s[0] * s[1] + s[0] * s[2];
      case Family::tilde_opt_far: {
        if (i == 0) return s[0];
        return (1.0 - params_.eps) * s[0] + s[i];
      }
      case Family::weighted_sum: {
        double sum = 0.0, mx = 0.0;
        for (int j = 0; j < n_; ++j) {
          sum += s[j];
          if (j != i) mx = std::max(mx, s[j]);
        }
        return params_.beta * (sum + mx);
      }
      case Family::participation_necessity: {
        double t = i == 0 ? 1.0 : 0.5;
        for (int j = 0; j < n_; ++j) t += s[j];
        return t;
      }
      case Family::custom:
        return interpolate_table(i, s);
    }
    throw std::logic_error("unknown family");
  }

  double interpolate_table(int agent, ColumnView s) const {
    const auto& tab = params_.table[static_cast<size_t>(agent)];
    std::vector<int> lo_idx(static_cast<size_t>(n_));
    std::vector<double> frac(static_cast<size_t>(n_));
    std::vector<size_t> radix(static_cast<size_t>(n_));
    size_t mult = 1;
    for (int d = n_ - 1; d >= 0; --d) {
      radix[static_cast<size_t>(d)] = mult;
      mult *= static_cast<size_t>(space(d).point_count());
    }
    for (int d = 0; d < n_; ++d) {
      const SignalSpace& sp = space(d);
      if (sp.is_singleton()) {
        lo_idx[static_cast<size_t>(d)] = 0;
        frac[static_cast<size_t>(d)] = 0.0;
        continue;
      }
      double pos = (s[d] - sp.lo) / sp.step_size();
      int k = static_cast<int>(std::floor(pos));
      if (k < 0) k = 0;
      if (k >= sp.steps) k = sp.steps - 1;
      lo_idx[static_cast<size_t>(d)] = k;
      frac[static_cast<size_t>(d)] = pos - static_cast<double>(k);
    }
    double acc = 0.0;
    int corners = 1 << n_;
    for (int mask = 0; mask < corners; ++mask) {
      double w = 1.0;
      size_t flat = 0;
      for (int d = 0; d < n_; ++d) {
        bool up = (mask >> d) & 1;
        double f = frac[static_cast<size_t>(d)];
        if (space(d).is_singleton() && up) { w = 0.0; break; }
        w *= up ? f : 1.0 - f;
        flat += radix[static_cast<size_t>(d)] * static_cast<size_t>(lo_idx[static_cast<size_t>(d)] + (up ? 1 : 0));
      }
      if (w != 0.0) acc += w * tab[flat];
    }
    return acc;
  }

  Family family_ = Family::wallet_game;
  int n_ = 1;
  int m_ = 1;
  bool multi_flag_ = false;
  std::vector<SignalSpace> spaces_;
  FamilyParams params_;
  std::optional<double> declared_gamma_;
  std::optional<double> declared_c_;
};

}  // namespace iva
