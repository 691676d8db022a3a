#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivauctions/equilibrium.hpp"
#include "ivauctions/experiments.hpp"
#include "ivauctions/mechanisms.hpp"
#include "ivauctions/properties.hpp"
#include "ivauctions/strategy.hpp"
#include "ivauctions/valuation.hpp"
#include "ivauctions/welfare.hpp"

namespace iva {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Schema or consistency failure, located by a JSON pointer.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::vector<std::pair<std::string, std::string>> errors)
      : std::runtime_error(format(errors)), errors_(std::move(errors)) {}
  const std::vector<std::pair<std::string, std::string>>& errors() const { return errors_; }

 private:
  static std::string format(const std::vector<std::pair<std::string, std::string>>& errors) {
    std::ostringstream os;
    os << "scenario validation failed:";
    for (const auto& [ptr, msg] : errors) os << "\n  " << ptr << ": " << msg;
    return os.str();
  }
  std::vector<std::pair<std::string, std::string>> errors_;
};

struct Scenario {
  ValuationModel model;
  std::optional<SignalProfile> signals;
  std::optional<BidProfile> bids;
  std::optional<StrategyProfile> strategy;
  std::optional<Prior> prior;
  int grid = 64;
  double tol = 1e-9;
  uint64_t seed = 20250810;
  json canonical;  // normalized echo of the input
};

namespace detail {

class ScenarioParser {
 public:
  explicit ScenarioParser(const json& j) : j_(j) {}

  Scenario parse() {
    Scenario sc;
    if (!j_.is_object()) {
      fail("", "scenario must be a JSON object");
      throw ScenarioError(std::move(errors_));
    }
    int version = get_int("/schema_version", 1);
    if (version != kSchemaVersion) fail("/schema_version", "unsupported schema version");
    sc.grid = get_int("/grid", 64);
    if (sc.grid < 1 || sc.grid > 100000) fail("/grid", "grid steps out of range");
    sc.tol = get_num("/tol", 1e-9);
    sc.seed = static_cast<uint64_t>(get_num("/seed", 20250810));

    if (!j_.contains("model")) {
      fail("/model", "missing");
    } else {
      sc.model = parse_model(j_.at("model"), sc.grid);
    }
    if (!errors_.empty()) throw ScenarioError(std::move(errors_));

    int n = sc.model.agents();
    int m = sc.model.multi_item() ? sc.model.items() : 1;
    if (j_.contains("signals")) sc.signals = parse_profile(j_.at("signals"), "/signals", n, m);
    if (j_.contains("bids")) {
      SignalProfile bids = parse_profile(j_.at("bids"), "/bids", n, m);
      std::vector<uint8_t> part;
      if (j_.contains("participation")) part = parse_participation(j_.at("participation"), n, m);
      if (errors_.empty()) sc.bids = part.empty() ? BidProfile(bids) : BidProfile(bids, part);
    } else if (j_.contains("participation")) {
      fail("/participation", "participation without bids");
    }
    if (j_.contains("strategy")) sc.strategy = parse_strategy(j_.at("strategy"), n, m);
    if (j_.contains("prior")) sc.prior = parse_prior(j_.at("prior"), n, m);

    if (!errors_.empty()) throw ScenarioError(std::move(errors_));
    sc.canonical = to_canonical(sc);
    return sc;
  }

  static json to_canonical(const Scenario& sc) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["grid"] = sc.grid;
    j["tol"] = sc.tol;
    j["seed"] = sc.seed;
    json model;
    model["family"] = family_name(sc.model.family());
    model["n"] = sc.model.agents();
    model["m"] = sc.model.items();
    model["params"] = params_json(sc.model);
    json spaces = json::array();
    for (int i = 0; i < sc.model.agents(); ++i) {
      json row = json::array();
      for (int l = 0; l < sc.model.items(); ++l) {
        const SignalSpace& sp = sc.model.space(i, l);
        row.push_back({{"lo", sp.lo}, {"hi", sp.hi}, {"steps", sp.steps}});
      }
      spaces.push_back(row);
    }
    model["spaces"] = spaces;
    j["model"] = model;
    if (sc.signals) j["signals"] = profile_json(*sc.signals);
    if (sc.bids) {
      j["bids"] = profile_json(sc.bids->bids);
      if (!sc.bids->participation.empty()) {
        json part = json::array();
        for (int i = 0; i < sc.bids->bids.n; ++i) {
          json row = json::array();
          for (int l = 0; l < sc.bids->bids.m; ++l) row.push_back(static_cast<int>(sc.bids->participation[static_cast<size_t>(i) * sc.bids->bids.m + l]));
          part.push_back(row);
        }
        j["participation"] = part;
      }
    }
    if (sc.strategy) {
      json agents = json::array();
      for (const auto& table : sc.strategy->agents) {
        json entries = json::array();
        for (const auto& e : table.entries()) {
          json entry;
          entry["own"] = e.own_signal;
          entry["bid"] = e.bid;
          if (!e.participation.empty()) {
            json p = json::array();
            for (uint8_t x : e.participation) p.push_back(static_cast<int>(x));
            entry["participation"] = p;
          }
          entries.push_back(entry);
        }
        agents.push_back({{"entries", entries}});
      }
      j["strategy"] = agents;
    }
    if (sc.prior) {
      json atoms = json::array();
      for (const auto& [s, p] : sc.prior->atoms) atoms.push_back({{"signals", profile_json(s)}, {"p", p}});
      j["prior"] = {{"atoms", atoms}};
    }
    return j;
  }

 private:
  static json profile_json(const SignalProfile& s) {
    if (s.m == 1) {
      json v = json::array();
      for (int i = 0; i < s.n; ++i) v.push_back(s.at(i));
      return v;
    }
    json rows = json::array();
    for (int i = 0; i < s.n; ++i) {
      json row = json::array();
      for (int l = 0; l < s.m; ++l) row.push_back(s.at(i, l));
      rows.push_back(row);
    }
    return rows;
  }

  static json params_json(const ValuationModel& mdl) {
    const FamilyParams& p = mdl.params();
    json out = json::object();
    switch (mdl.family()) {
      case Family::linear_weighted:
        out["W"] = p.W;
        out["offsets"] = p.offsets;
        break;
      case Family::resale_style:
        out["alpha"] = p.alpha;
        break;
      case Family::common_value:
        out["weights"] = p.weights;
        out["offset"] = p.offset;
        break;
      case Family::bad_example1:
      case Family::bad_example2:
        out["eps"] = p.eps;
        break;
      case Family::lower_bound_case1:
        out["beta"] = p.beta;
        out["c"] = p.c;
        out["eps"] = p.eps;
        break;
      case Family::lower_bound_case2:
        out["beta"] = p.beta;
        out["gamma"] = p.gamma;
        out["eps"] = p.eps;
        break;
      case Family::rsv_example:
        out["c"] = p.c;
        break;
      case Family::tilde_opt_far:
        out["eps"] = p.eps;
        break;
      case Family::weighted_sum:
        out["beta"] = p.beta;
        break;
      case Family::custom:
        out["table"] = p.table;
        break;
      default:
        break;
    }
    return out;
  }

  void fail(const std::string& pointer, const std::string& message) {
    errors_.emplace_back(pointer.empty() ? "/" : pointer, message);
  }

  int get_int(const std::string& ptr, int fallback) {
    double v = get_num(ptr, fallback);
    return static_cast<int>(v);
  }

  double get_num(const std::string& ptr, double fallback) {
    json::json_pointer p(ptr);
    if (!j_.contains(p)) return fallback;
    const json& v = j_.at(p);
    if (!v.is_number()) {
      fail(ptr, "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  ValuationModel parse_model(const json& jm, int grid) {
    if (!jm.is_object()) {
      fail("/model", "expected an object");
      return ValuationModel::wallet_game(2);
    }
    std::string fam_name = jm.value("family", "");
    auto fam = family_from_name(fam_name);
    if (!fam) {
      fail("/model/family", "unknown family '" + fam_name + "'");
      return ValuationModel::wallet_game(2);
    }
    int n = jm.value("n", 0);
    int m = jm.value("m", 1);
    int steps = jm.value("grid", grid);
    json params = jm.value("params", json::object());
    auto num = [&](const char* key, double fallback) { return params.value(key, fallback); };
    try {
      ValuationModel mdl = build(*fam, params, n, m, steps, num);
      if (jm.contains("spaces")) apply_spaces(mdl, jm.at("spaces"));
      return mdl;
    } catch (const std::exception& e) {
      fail("/model", e.what());
      return ValuationModel::wallet_game(2);
    }
  }

  template <typename NumFn>
  ValuationModel build(Family fam, const json& params, int n, int m, int steps, NumFn num) {
    SignalSpace unit(0, 1, steps);
    switch (fam) {
      case Family::linear_weighted: {
        auto W = params.value("W", std::vector<std::vector<double>>{});
        auto offsets = params.value("offsets", std::vector<double>{});
        return ValuationModel::linear_weighted(W, offsets, unit, std::max(1, m));
      }
      case Family::resale_style:
        return ValuationModel::resale_style(n, num("alpha", 0.5), unit);
      case Family::wallet_game:
        return ValuationModel::wallet_game(n, unit);
      case Family::common_value:
        return ValuationModel::common_value(n, params.value("weights", std::vector<double>{}),
                                            num("offset", 0.0), unit);
      case Family::sine_pair:
        return ValuationModel::sine_pair(steps);
      case Family::bad_example1:
        return ValuationModel::bad_example1(n, num("eps", 0.01), steps);
      case Family::bad_example2:
        return ValuationModel::bad_example2(n, num("eps", 0.01), steps);
      case Family::lower_bound_case1:
        return ValuationModel::lower_bound_case1(num("beta", 100), num("c", 2), num("eps", 0.01), steps);
      case Family::lower_bound_case2:
        return ValuationModel::lower_bound_case2(num("beta", 100), num("gamma", 3), num("eps", 0.01), steps);
      case Family::rsv_example:
        return ValuationModel::rsv_example(n, num("c", 4), steps);
      case Family::balls_and_bins:
        return ValuationModel::balls_and_bins(n, std::max(1, std::min(steps, 1)));
      case Family::product_cross:
        return ValuationModel::product_cross(std::max(1, m), steps);
      case Family::tilde_opt_far:
        return ValuationModel::tilde_opt_far(n, m, num("eps", 0.1), steps);
      case Family::weighted_sum:
        return ValuationModel::weighted_sum(n, num("beta", 1.0), num("hi", 50.0), steps);
      case Family::participation_necessity:
        return ValuationModel::participation_necessity(n, m, steps);
      case Family::custom: {
        std::vector<SignalSpace> spaces;
        if (params.contains("spaces")) {
          for (const auto& sp : params.at("spaces"))
            spaces.emplace_back(sp.value("lo", 0.0), sp.value("hi", 1.0), sp.value("steps", steps));
        }
        auto table = params.value("table", std::vector<std::vector<double>>{});
        return ValuationModel::custom(spaces, table);
      }
    }
    throw std::invalid_argument("unhandled family");
  }

  void apply_spaces(ValuationModel& mdl, const json& spaces) {
    if (!spaces.is_array() || static_cast<int>(spaces.size()) != mdl.agents()) {
      fail("/model/spaces", "expected one row per agent");
      return;
    }
    for (int i = 0; i < mdl.agents(); ++i) {
      const json& row = spaces.at(static_cast<size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != mdl.items()) {
        fail("/model/spaces/" + std::to_string(i), "expected one space per item");
        return;
      }
      for (int l = 0; l < mdl.items(); ++l) {
        const json& sp = row.at(static_cast<size_t>(l));
        try {
          mdl.set_space(i, l, SignalSpace(sp.value("lo", 0.0), sp.value("hi", 1.0), sp.value("steps", 0)));
        } catch (const std::exception& e) {
          fail("/model/spaces/" + std::to_string(i) + "/" + std::to_string(l), e.what());
        }
      }
    }
  }

  SignalProfile parse_profile(const json& v, const std::string& ptr, int n, int m) {
    SignalProfile out(std::max(1, n), std::max(1, m));
    if (m == 1) {
      if (!v.is_array() || static_cast<int>(v.size()) != n) {
        fail(ptr, "expected an array of " + std::to_string(n) + " numbers");
        return out;
      }
      for (int i = 0; i < n; ++i) {
        if (!v.at(static_cast<size_t>(i)).is_number()) {
          fail(ptr + "/" + std::to_string(i), "expected a number");
          return out;
        }
        out.at(i) = v.at(static_cast<size_t>(i)).get<double>();
      }
      return out;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      fail(ptr, "expected " + std::to_string(n) + " rows");
      return out;
    }
    for (int i = 0; i < n; ++i) {
      const json& row = v.at(static_cast<size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != m) {
        fail(ptr + "/" + std::to_string(i), "expected " + std::to_string(m) + " columns");
        return out;
      }
      for (int l = 0; l < m; ++l) out.at(i, l) = row.at(static_cast<size_t>(l)).get<double>();
    }
    return out;
  }

  std::vector<uint8_t> parse_participation(const json& v, int n, int m) {
    std::vector<uint8_t> out(static_cast<size_t>(n) * static_cast<size_t>(m), 1);
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      fail("/participation", "expected " + std::to_string(n) + " rows");
      return {};
    }
    for (int i = 0; i < n; ++i) {
      const json& row = v.at(static_cast<size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != m) {
        fail("/participation/" + std::to_string(i), "expected " + std::to_string(m) + " entries");
        return {};
      }
      for (int l = 0; l < m; ++l) {
        int x = row.at(static_cast<size_t>(l)).get<int>();
        if (x != 0 && x != 1) {
          fail("/participation/" + std::to_string(i) + "/" + std::to_string(l), "entries must be 0 or 1");
          return {};
        }
        out[static_cast<size_t>(i) * m + l] = static_cast<uint8_t>(x);
      }
    }
    return out;
  }

  std::optional<StrategyProfile> parse_strategy(const json& v, int n, int m) {
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      fail("/strategy", "expected one table per agent");
      return std::nullopt;
    }
    StrategyProfile sp;
    sp.agents.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const json& tab = v.at(static_cast<size_t>(i));
      if (!tab.contains("entries") || !tab.at("entries").is_array()) {
        fail("/strategy/" + std::to_string(i), "expected an object with 'entries'");
        return std::nullopt;
      }
      for (const json& je : tab.at("entries")) {
        StrategyTable::Entry e;
        e.own_signal = je.value("own", std::vector<double>{});
        e.bid = je.value("bid", std::vector<double>{});
        if (je.contains("participation"))
          for (int x : je.at("participation").get<std::vector<int>>()) e.participation.push_back(static_cast<uint8_t>(x));
        if (static_cast<int>(e.own_signal.size()) != m || static_cast<int>(e.bid.size()) != m) {
          fail("/strategy/" + std::to_string(i), "own/bid rows must have m entries");
          return std::nullopt;
        }
        sp.agents[static_cast<size_t>(i)].add(std::move(e));
      }
    }
    return sp;
  }

  std::optional<Prior> parse_prior(const json& v, int n, int m) {
    if (!v.contains("atoms") || !v.at("atoms").is_array()) {
      fail("/prior", "expected an object with 'atoms'");
      return std::nullopt;
    }
    Prior prior;
    int k = 0;
    for (const json& atom : v.at("atoms")) {
      SignalProfile s = parse_profile(atom.value("signals", json::array()),
                                      "/prior/atoms/" + std::to_string(k) + "/signals", n, m);
      double p = atom.value("p", -1.0);
      if (p < 0.0) fail("/prior/atoms/" + std::to_string(k) + "/p", "probability must be nonnegative");
      prior.atoms.emplace_back(std::move(s), p);
      ++k;
    }
    try {
      prior.validate();
    } catch (const std::exception& e) {
      fail("/prior", e.what());
      return std::nullopt;
    }
    return prior;
  }

  const json& j_;
  std::vector<std::pair<std::string, std::string>> errors_;
};

}  // namespace detail

inline Scenario parse_scenario(const json& j) { return detail::ScenarioParser(j).parse(); }

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({{"/", "cannot open file: " + path}});
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ScenarioError({{"/", std::string("JSON parse error: ") + e.what()}});
  }
  return parse_scenario(j);
}

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string scenario_hash(const Scenario& sc) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(sc.canonical.dump())));
  return std::string(buf);
}

// ---- report serialization --------------------------------------------------------

inline json report_envelope(const Scenario* sc, int grid, uint64_t seed) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["grid"] = grid;
  j["seed"] = seed;
  if (sc) j["scenario_hash"] = scenario_hash(*sc);
  return j;
}

inline json to_json(const Witness& w) {
  json j;
  j["valid"] = w.valid;
  if (!w.valid) return j;
  j["agents"] = w.agents;
  if (w.item >= 0) j["item"] = w.item;
  j["signal"] = w.signal;
  j["delta"] = w.delta;
  return j;
}

inline json to_json(const PropertyReport& rep) {
  json j;
  j["property"] = rep.property;
  j["pass"] = rep.pass;
  j["margin"] = std::isfinite(rep.margin) ? json(rep.margin) : json(rep.margin > 0 ? "inf" : "-inf");
  j["estimate"] = std::isfinite(rep.estimate) ? json(rep.estimate) : json("inf");
  j["tuples_checked"] = rep.tuples_checked;
  j["sampled"] = rep.sampled;
  j["witness"] = to_json(rep.witness);
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

inline json to_json(const Outcome& o) {
  json j;
  json winners = json::array();
  for (const auto& w : o.winners) winners.push_back(w ? json(*w) : json(nullptr));
  j["winners"] = winners;
  j["payments"] = o.payments;
  j["item_scores"] = o.item_scores;
  return j;
}

inline json to_json(const EquilibriumReport& rep) {
  json j;
  j["mode"] = eq_mode_name(rep.mode);
  j["eps"] = rep.eps;
  j["pass"] = rep.pass;
  j["nob"] = rep.nob;
  if (rep.nob_checked) {
    j["nob_status"] = {{"pass", rep.nob_pass},
                       {"margin", std::isfinite(rep.nob_margin) ? json(rep.nob_margin) : json("inf")}};
  }
  j["sampled"] = rep.sampled;
  j["contexts_checked"] = rep.contexts_checked;
  json worst;
  worst["agent"] = rep.worst.agent;
  worst["gain"] = rep.worst.gain;
  worst["own_signal"] = rep.worst.own_signal;
  worst["bid"] = rep.worst.deviation.bid;
  if (!rep.worst.deviation.participation.empty()) {
    json p = json::array();
    for (uint8_t x : rep.worst.deviation.participation) p.push_back(static_cast<int>(x));
    worst["participation"] = p;
  }
  j["worst_deviation"] = worst;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

inline json to_json(const WelfareReport& rep) {
  auto fin = [](double x) { return std::isfinite(x) ? json(x) : json("inf"); };
  json j;
  j["opt"] = rep.opt;
  j["eq"] = rep.eq;
  j["poa_ratio"] = fin(rep.poa_ratio);
  if (rep.multi) {
    j["truncated_opt"] = rep.truncated_opt;
    j["self"] = rep.self;
    j["other"] = rep.other;
    j["d"] = fin(rep.d);
    j["poa_ratio_truncated"] = fin(rep.poa_ratio_truncated);
  }
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

inline json to_json(const ExperimentReport& rep) {
  json j;
  j["name"] = rep.name;
  j["params"] = rep.params;
  j["pass"] = rep.pass;
  json ms = json::array();
  for (const auto& m : rep.measurements) {
    json mj;
    mj["name"] = m.name;
    mj["value"] = std::isfinite(m.value) ? json(m.value) : json("inf");
    mj["target"] = m.target;
    mj["cmp"] = m.cmp;
    mj["tol"] = m.tol;
    mj["pass"] = m.pass;
    ms.push_back(mj);
  }
  j["measurements"] = ms;
  if (!rep.series.empty()) j["series"] = rep.series;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

/// CSV rendering of an experiment report's measurement table.
inline std::string to_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "name,value,cmp,target,tol,pass\n";
  for (const auto& m : rep.measurements)
    os << m.name << ',' << m.value << ',' << m.cmp << ',' << m.target << ',' << m.tol << ','
       << (m.pass ? 1 : 0) << '\n';
  return os.str();
}

/// Generic key,value CSV of any JSON report (nested keys joined by '.').
inline void flatten_json(const json& j, const std::string& prefix, std::ostringstream& os) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten_json(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array()) {
    int idx = 0;
    for (const auto& v : j) flatten_json(v, prefix + "." + std::to_string(idx++), os);
  } else {
    os << prefix << ',' << j.dump() << '\n';
  }
}

inline std::string to_csv(const json& report) {
  std::ostringstream os;
  os << "key,value\n";
  flatten_json(report, "", os);
  return os.str();
}

/// Per-atom welfare table (for plotting): one row per prior atom.
inline std::string per_atom_welfare_csv(const ValuationModel& mdl, const Prior& prior,
                                        const StrategyProfile* sigma, const MechanismSpec* mech) {
  std::ostringstream os;
  os << "atom,p,opt" << (mdl.multi_item() ? ",truncated_opt" : "") << (sigma ? ",eq" : "") << "\n";
  int idx = 0;
  for (const auto& [s, p] : prior.atoms) {
    os << idx++ << ',' << p << ',' << opt(mdl, s);
    if (mdl.multi_item()) os << ',' << truncated_opt(mdl, s);
    if (sigma && mech) os << ',' << expected_welfare(*mech, mdl, sigma->apply(mdl, s), s);
    os << '\n';
  }
  return os.str();
}

}  // namespace iva
