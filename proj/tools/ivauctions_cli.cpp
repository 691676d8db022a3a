// Command-line driver: scenario ingestion, property checks, mechanism runs,
// equilibrium verification, welfare reports, and the named experiment
// reproductions. Exit codes: 0 = pass, 1 = usage/config error, 2 = a
// verified mathematical failure (with witness in the report).

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ivauctions/scenario.hpp"

using namespace iva;

namespace {

struct Args {
  std::string command;
  std::map<std::string, std::string> flags;
  std::map<std::string, double> params;  // repeated --param key=value
};

const char* kUsage = R"(usage: ivauctions <command> [flags]

commands:
  check       --scenario PATH --property NAME [--tol X]
              properties: monotone, homogeneous_influence, submodular,
              lemma_diff_bound, corollary_ratio, c, gamma
  run         --scenario PATH --mechanism KIND
  equilibrium --scenario PATH --mode {pne|epe|bne} [--mechanism KIND]
              [--eps X] [--nob {0|1}]   (no strategy table: exhaustive
              NOB PNE scan at the scenario's signal profile)
  welfare     --scenario PATH [--mechanism KIND --mode MODE --eps X]
  reproduce   --name NAME [--param k=v ...] [--seed N] [--grid N]
  montecarlo  --name {ballsbins|weighted_sum} [--param k=v ...] [--seed N]

common flags:
  --out PATH         write the JSON report to PATH (default: stdout)
  --format {json|csv}
  --grid N           grid resolution override
  --eps X            equilibrium tolerance (default 1e-9)
  --seed N
  --threads N        worker threads (default: hardware, env IVAUCTIONS_THREADS)
)";

bool parse_args(int argc, char** argv, Args& out) {
  if (argc < 2) return false;
  out.command = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) != 0) return false;
    std::string key = a.substr(2);
    if (i + 1 >= argc) return false;
    std::string value = argv[++i];
    if (key == "param") {
      auto eq = value.find('=');
      if (eq == std::string::npos) return false;
      out.params[value.substr(0, eq)] = std::atof(value.c_str() + eq + 1);
    } else {
      out.flags[key] = value;
    }
  }
  return true;
}

std::string flag_or(const Args& a, const std::string& key, const std::string& fallback) {
  auto it = a.flags.find(key);
  return it == a.flags.end() ? fallback : it->second;
}

double flag_num(const Args& a, const std::string& key, double fallback) {
  auto it = a.flags.find(key);
  return it == a.flags.end() ? fallback : std::atof(it->second.c_str());
}

int emit(const Args& args, const json& report, int exit_code) {
  std::string out_path = flag_or(args, "out", "");
  std::string text = flag_or(args, "format", "json") == "csv" ? to_csv(report) : report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return 1;
    }
    out << text;
  }
  return exit_code;
}

int emit_csv(const Args& args, const std::string& csv, int exit_code) {
  std::string out_path = flag_or(args, "out", "");
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return 1;
    }
    out << csv;
  }
  return exit_code;
}

MechanismSpec mechanism_from_flags(const Args& args, bool multi) {
  std::string name = flag_or(args, "mechanism", multi ? "sim_privatized_spa" : "gva");
  if (name == "mixture") {
    std::string inner = flag_or(args, "inner", "gva");
    auto ik = mechanism_from_name(inner);
    if (!ik) throw std::invalid_argument("unknown inner mechanism: " + inner);
    return MechanismSpec::mixture_of(*ik, flag_num(args, "mix-eps", 0.1));
  }
  auto kind = mechanism_from_name(name);
  if (!kind) throw std::invalid_argument("unknown mechanism: " + name);
  return MechanismSpec::of(*kind);
}

int cmd_check(const Args& args) {
  Scenario sc = load_scenario(flag_or(args, "scenario", ""));
  if (args.flags.count("grid")) sc.model.set_grid_steps(static_cast<int>(flag_num(args, "grid", 64)));
  std::string prop = flag_or(args, "property", "");
  CheckOptions opts;
  opts.tol = flag_num(args, "tol", sc.tol);
  opts.seed = static_cast<uint64_t>(flag_num(args, "seed", static_cast<double>(sc.seed)));
  opts.threads = static_cast<int>(flag_num(args, "threads", 0));

  PropertyReport rep;
  if (prop == "c") {
    rep = estimate_c(sc.model, opts);
  } else if (prop == "gamma") {
    rep = estimate_gamma(sc.model, opts);
  } else {
    PropertyQuery q{ValuationProperty::monotone};
    if (prop == "monotone")
      q.property = ValuationProperty::monotone;
    else if (prop == "homogeneous_influence")
      q.property = ValuationProperty::homogeneous_influence;
    else if (prop == "submodular")
      q.property = ValuationProperty::submodular;
    else if (prop == "lemma_diff_bound" || prop == "corollary_ratio") {
      q.property = prop == "lemma_diff_bound" ? ValuationProperty::lemma_diff_bound
                                              : ValuationProperty::corollary_ratio;
      q.gamma = args.params.count("gamma") ? args.params.at("gamma")
                                           : sc.model.declared_gamma().value_or(1.0);
      q.c = args.params.count("c") ? args.params.at("c") : sc.model.declared_c().value_or(1.0);
      q.d = args.params.count("d") ? args.params.at("d") : std::max(q.gamma, q.c);
    } else {
      std::cerr << "unknown property: " << prop << "\n";
      return 1;
    }
    rep = check_property(sc.model, q, opts);
  }
  json j = report_envelope(&sc, sc.grid, opts.seed);
  j["report"] = to_json(rep);
  return emit(args, j, rep.pass ? 0 : 2);
}

int cmd_run(const Args& args) {
  Scenario sc = load_scenario(flag_or(args, "scenario", ""));
  if (!sc.bids) {
    std::cerr << "run: scenario has no bids\n";
    return 1;
  }
  MechanismSpec mech = mechanism_from_flags(args, sc.model.multi_item());
  json j = report_envelope(&sc, sc.grid, sc.seed);
  if (mech.kind == MechanismKind::proportional) {
    j["report"]["probabilities"] = run_proportional(sc.bids->bids);
  } else if (mech.kind == MechanismKind::mixture) {
    Outcome inner = run_mechanism(MechanismSpec::of(mech.inner), sc.model, *sc.bids);
    j["report"]["inner"] = to_json(inner);
    j["report"]["proportional_probabilities"] = run_proportional(sc.bids->bids);
    j["report"]["eps"] = mech.eps;
    if (sc.signals)
      j["report"]["expected_welfare"] = expected_welfare(mech, sc.model, *sc.bids, *sc.signals);
  } else if (mech.kind == MechanismKind::random_sampling_vickrey) {
    const SignalProfile& truth = sc.signals ? *sc.signals : sc.bids->bids;
    RsvExpectation ex = rsv_expectation(sc.model, *sc.bids, truth);
    j["report"]["expected_welfare"] = ex.expected_welfare;
    j["report"]["win_probability"] = ex.win_probability;
  } else {
    Outcome o = run_mechanism(mech, sc.model, *sc.bids);
    j["report"] = to_json(o);
    if (sc.signals) j["report"]["welfare"] = outcome_welfare(sc.model, o, *sc.signals);
  }
  j["mechanism"] = mechanism_name(mech.kind);
  return emit(args, j, 0);
}

int cmd_equilibrium(const Args& args) {
  Scenario sc = load_scenario(flag_or(args, "scenario", ""));
  MechanismSpec mech = mechanism_from_flags(args, sc.model.multi_item());
  // default eps: 1e-9 for verification, the grid-Lipschitz bound for scans
  bool scanning = !sc.strategy.has_value();
  double eps = args.flags.count("eps")
                   ? flag_num(args, "eps", 1e-9)
                   : (scanning && sc.signals ? grid_lipschitz_eps(sc.model, *sc.signals) : 1e-9);
  bool nob = flag_num(args, "nob", 1) != 0;
  std::string mode = flag_or(args, "mode", "pne");
  json j = report_envelope(&sc, sc.grid, sc.seed);

  if (!sc.strategy) {
    if (mode != "pne") {
      std::cerr << "equilibrium: scenario has no strategy table; exhaustive scan supports --mode pne only\n";
      return 1;
    }
    if (!sc.signals) {
      std::cerr << "equilibrium: exhaustive scan needs a signal profile in the scenario\n";
      return 1;
    }
    PneScanResult res = scan_nob_pne(mech, sc.model, *sc.signals, eps);
    json r;
    r["profiles_checked"] = res.profiles_checked;
    r["min_max_gain"] = res.min_max_gain;
    r["pne_found"] = res.found;
    if (res.found) {
      json eqs = json::array();
      for (const auto& b : res.equilibria) {
        json bv = json::array();
        for (double x : b.data) bv.push_back(x);
        eqs.push_back(bv);
      }
      r["equilibria"] = eqs;
    } else {
      r["certificate"] = "no eps-PNE on grid";
    }
    j["report"] = r;
    return emit(args, j, res.found ? 0 : 2);
  }

  VerifyContext ctx;
  ctx.seed = sc.seed;
  if (mode == "pne") {
    ctx.mode = EqMode::pne;
    if (!sc.signals) {
      std::cerr << "equilibrium: --mode pne needs a signal profile\n";
      return 1;
    }
    ctx.at = *sc.signals;
  } else if (mode == "epe") {
    ctx.mode = EqMode::epe;
  } else if (mode == "bne") {
    ctx.mode = EqMode::bne;
    if (!sc.prior) {
      std::cerr << "equilibrium: --mode bne needs a prior\n";
      return 1;
    }
    ctx.prior = *sc.prior;
  } else {
    std::cerr << "unknown mode: " << mode << "\n";
    return 1;
  }
  EquilibriumReport rep = verify(mech, sc.model, *sc.strategy, ctx, eps, nob);
  j["report"] = to_json(rep);
  return emit(args, j, rep.pass ? 0 : 2);
}

int cmd_welfare(const Args& args) {
  Scenario sc = load_scenario(flag_or(args, "scenario", ""));
  json j = report_envelope(&sc, sc.grid, sc.seed);
  if (sc.strategy) {
    MechanismSpec mech = mechanism_from_flags(args, sc.model.multi_item());
    VerifyContext ctx;
    ctx.seed = sc.seed;
    std::string mode = flag_or(args, "mode", sc.prior ? "bne" : "pne");
    if (mode == "bne") {
      ctx.mode = EqMode::bne;
      if (!sc.prior) {
        std::cerr << "welfare: --mode bne needs a prior\n";
        return 1;
      }
      ctx.prior = *sc.prior;
    } else {
      ctx.mode = mode == "epe" ? EqMode::epe : EqMode::pne;
      if (!sc.signals) {
        std::cerr << "welfare: needs a signal profile\n";
        return 1;
      }
      ctx.at = *sc.signals;
    }
    EquilibriumReport ver;
    try {
      WelfareReport rep = poa_report(mech, sc.model, *sc.strategy, ctx, flag_num(args, "eps", 1e-9),
                                     flag_num(args, "nob", 1) != 0, &ver);
      j["report"] = to_json(rep);
      j["verification"] = to_json(ver);
      return emit(args, j, 0);
    } catch (const std::runtime_error&) {
      j["report"]["rejected"] = "strategy profile failed equilibrium verification";
      j["verification"] = to_json(ver);
      return emit(args, j, 2);
    }
  }
  // benchmark-only report
  Prior prior;
  if (sc.prior)
    prior = *sc.prior;
  else if (sc.signals)
    prior = Prior::point_mass(*sc.signals);
  if (prior.atoms.empty()) {
    std::cerr << "welfare: needs signals or a prior\n";
    return 1;
  }
  if (flag_num(args, "per-atom", 0) != 0) {
    return emit_csv(args, per_atom_welfare_csv(sc.model, prior, nullptr, nullptr), 0);
  }
  json r;
  r["opt"] = expected_opt(sc.model, prior);
  if (sc.model.multi_item()) {
    SelfOther so = decompose_self_other(sc.model, prior);
    AsymmetryReport asym = asymmetry_d(sc.model, prior);
    r["truncated_opt"] = so.truncated_opt;
    r["self"] = so.self;
    r["other"] = so.other;
    r["d"] = std::isfinite(asym.d) ? json(asym.d) : json("inf");
  }
  j["report"] = r;
  return emit(args, j, 0);
}

int cmd_reproduce(const Args& args) {
  std::string name = flag_or(args, "name", "");
  if (name.empty()) {
    std::cerr << "reproduce: --name required\n";
    return 1;
  }
  ExperimentParams params = args.params;
  if (args.flags.count("seed")) params["seed"] = flag_num(args, "seed", 0);
  if (args.flags.count("grid")) params["grid"] = flag_num(args, "grid", 64);
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep = reproduce(name, params);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  std::cerr << name << ": " << (rep.pass ? "pass" : "FAIL") << " (" << ms.count() << " ms)\n";
  if (flag_or(args, "format", "json") == "csv") return emit_csv(args, to_csv(rep), rep.pass ? 0 : 2);
  json j = report_envelope(nullptr, static_cast<int>(param_or(params, "grid", 64)),
                           static_cast<uint64_t>(param_or(params, "seed", 20250810)));
  j["report"] = to_json(rep);
  return emit(args, j, rep.pass ? 0 : 2);
}

int cmd_montecarlo(const Args& args) {
  std::string name = flag_or(args, "name", "");
  uint64_t seed = static_cast<uint64_t>(flag_num(args, "seed", 20250810));
  ExperimentReport rep;
  if (name == "ballsbins") {
    rep = montecarlo_multineg(static_cast<int>(param_or(args.params, "n", 64)),
                              static_cast<int>(param_or(args.params, "trials", 1000)), seed);
  } else if (name == "weighted_sum") {
    rep = montecarlo_weighted_sum(static_cast<int>(param_or(args.params, "n", 10)),
                                  param_or(args.params, "beta", 1.0),
                                  static_cast<int>(param_or(args.params, "trials", 2000)), seed);
  } else {
    std::cerr << "montecarlo: --name must be ballsbins or weighted_sum\n";
    return 1;
  }
  if (flag_or(args, "format", "json") == "csv") return emit_csv(args, to_csv(rep), rep.pass ? 0 : 2);
  json j = report_envelope(nullptr, 0, seed);
  j["report"] = to_json(rep);
  return emit(args, j, rep.pass ? 0 : 2);
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  if (!parse_args(argc, argv, args)) {
    std::cerr << kUsage;
    return 1;
  }
  if (args.flags.count("threads")) {
    // the environment variable, when set, takes precedence over the flag
    setenv("IVAUCTIONS_THREADS", args.flags.at("threads").c_str(), 0);
  }
  try {
    if (args.command == "check") return cmd_check(args);
    if (args.command == "run") return cmd_run(args);
    if (args.command == "equilibrium") return cmd_equilibrium(args);
    if (args.command == "welfare") return cmd_welfare(args);
    if (args.command == "reproduce") return cmd_reproduce(args);
    if (args.command == "montecarlo") return cmd_montecarlo(args);
    std::cerr << kUsage;
    return 1;
  } catch (const ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
