#include "qsc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include <CLI11.hpp>

#include "qsc/bounds.hpp"
#include "qsc/eop.hpp"
#include "qsc/json_io.hpp"
#include "qsc/ki.hpp"
#include "qsc/renyi.hpp"
#include "qsc/sim.hpp"

#ifndef QSC_VERSION
#define QSC_VERSION "0.0.0"
#endif

namespace qsc::cli {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int default_threads() {
  int threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("QSC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) threads = std::min(threads, static_cast<int>(v));
  }
  return threads;
}

std::string version() { return QSC_VERSION; }

namespace {

std::string format_general(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string tolerance_text() {
  const Tolerances& t = kTolerances;
  return "hermitian=" + format_general(t.hermitian) + " trace=" + format_general(t.trace) +
         " min_eigenvalue=" + format_general(t.min_eigenvalue) + " unit_norm=" + format_general(t.unit_norm) +
         " isometry=" + format_general(t.isometry) + " log_clip=" + format_general(t.log_clip);
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? ";" : "") + format_number(xs[k]);
  return s;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? ";" : "") + std::to_string(xs[k]);
  return s;
}

std::string join_strings(const std::vector<std::string>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? ";" : "") + xs[k];
  return s;
}

// Effective configuration of one invocation, echoed into the output header.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }

  std::string header() const {
    std::string canonical = "version=" + version() + "\ncommand=" + command + "\nseed=" + std::to_string(seed) +
                            "\ntolerances=" + tolerance_text() + "\n";
    std::string config;
    for (const auto& [k, v] : entries) {
      canonical += k + "=" + v + "\n";
      config += (config.empty() ? "" : " ") + k + "=" + v;
    }
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
    return "# qsc " + version() + "\n# command: " + command + "\n# seed: " + std::to_string(seed) +
           "\n# tolerances: " + tolerance_text() + "\n# config: " + config + "\n# config_hash: fnv1a64:" + hash +
           "\n";
  }
};

BoundMode parse_mode(const std::string& s) { return s == "visible" ? BoundMode::visible : BoundMode::blind; }

DensityMatrix load_state_checked(const std::string& path) { return io::load_state(path); }

Ensemble load_ensemble_checked(const std::string& path) {
  try {
    return io::load_ensemble(path);
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ValidationError(path + ": " + what);
  }
}

struct EopFlags {
  int restarts = 32;
  int env_dim = 0;
  int max_iter = 500;

  void bind(CLI::App* sub, const std::string& prefix = "") {
    sub->add_option("--" + prefix + "restarts", restarts, "Random restarts of the EoP minimization")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--" + prefix + "env-dim", env_dim, "Environment dimension (0 selects |A|^2 |R|^2)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--" + prefix + "max-iter", max_iter, "Iterations per restart")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  EopOptions options(std::uint64_t seed) const {
    EopOptions o;
    o.restarts = restarts;
    o.env_dim = env_dim;
    o.max_iter = max_iter;
    o.seed = seed;
    o.threads = default_threads();
    return o;
  }

  void record(RunConfig& cfg, const std::string& prefix = "") const {
    cfg.set(prefix + "restarts", std::to_string(restarts));
    cfg.set(prefix + "env_dim", std::to_string(env_dim));
    cfg.set(prefix + "max_iter", std::to_string(max_iter));
  }
};

struct SimFlags {
  int restarts = 16;
  int max_rounds = 60;
  int inner_iter = 80;

  void bind(CLI::App* sub) {
    sub->add_option("--restarts", restarts, "Random restarts of the scheme search")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--max-rounds", max_rounds, "See-saw rounds")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--inner-iter", inner_iter, "Optimizer steps per half round")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  SimOptions options(std::uint64_t seed) const {
    SimOptions o;
    o.restarts = restarts;
    o.max_rounds = max_rounds;
    o.inner_iter = inner_iter;
    o.seed = seed;
    o.threads = default_threads();
    return o;
  }

  void record(RunConfig& cfg) const {
    cfg.set("restarts", std::to_string(restarts));
    cfg.set("max_rounds", std::to_string(max_rounds));
    cfg.set("inner_iter", std::to_string(inner_iter));
  }
};

struct Flags {
  std::string out_path;
  std::uint64_t seed = 0;
  std::string state_path;
  std::string ensemble_path;
  std::string mode = "blind";
  std::vector<double> alphas;
  std::vector<double> rates;
  std::vector<int> ns;
  std::vector<std::string> keep;
  int n = 1;
  int n_max = 1;
  int m_dim = 0;
  double rate = -1.0;
  int ki_max_rounds = 64;
  bool exponent = false;
  bool strict = false;
  std::string scheme_out;
  EopFlags eop;
  SimFlags sim;
};

// --- subcommands -------------------------------------------------------------

std::string cmd_entropy(Flags& f, RunConfig& cfg) {
  if (f.alphas.empty()) f.alphas = {1.0};
  cfg.set("state", f.state_path);
  cfg.set("alpha", join_numbers(f.alphas));
  cfg.set("keep", join_strings(f.keep));
  DensityMatrix rho = load_state_checked(f.state_path);
  if (!f.keep.empty()) rho = partial_trace(rho, f.keep);

  std::ostringstream os;
  os << cfg.header() << "alpha,entropy\n";
  for (double a : f.alphas) os << format_number(a) << "," << format_number(renyi_entropy(rho, a).value) << "\n";
  return os.str();
}

std::string cmd_ki(Flags& f, RunConfig& cfg) {
  if (f.alphas.empty()) f.alphas = {0.5, 1.0, 2.0, 4.0};
  cfg.set("state", f.state_path);
  cfg.set("alpha", join_numbers(f.alphas));
  cfg.set("max_rounds", std::to_string(f.ki_max_rounds));
  const DensityMatrix rho = load_state_checked(f.state_path);
  KIOptions opts;
  opts.seed = cfg.seed;
  opts.max_rounds = f.ki_max_rounds;
  const KIDecomposition d = ki_decompose(rho, opts);
  const KIDims& dims = d.dims;

  std::ostringstream os;
  os << cfg.header();
  os << "c,n,q,residual,rounds\n"
     << dims.c << "," << dims.n << "," << dims.q << "," << format_number(d.residual) << "," << d.rounds << "\n\n";
  os << "block,p,n_dim,q_dim\n";
  for (std::size_t j = 0; j < d.blocks.size(); ++j)
    os << j << "," << format_number(d.blocks[j].p) << "," << d.blocks[j].n_dim() << "," << d.blocks[j].q_dim()
       << "\n";
  os << "\nalpha,S_CQ\n";
  for (double a : f.alphas) os << format_number(a) << "," << format_number(ki_entropy(d, a)) << "\n";
  return os.str();
}

std::string cmd_eop(Flags& f, RunConfig& cfg, bool& not_converged) {
  if (f.alphas.empty()) f.alphas = {1.0};
  cfg.set("state", f.state_path);
  cfg.set("alpha", join_numbers(f.alphas));
  cfg.set("n_max", std::to_string(f.n_max));
  f.eop.record(cfg);
  const DensityMatrix rho = load_state_checked(f.state_path);
  const EopOptions opts = f.eop.options(cfg.seed);

  std::ostringstream os;
  os << cfg.header() << "alpha,n,per_copy,spread,restarts,best_restart,status\n";
  for (double a : f.alphas) {
    const EopResult r = eop(rho, a, opts);
    if (r.status != EopStatus::converged) not_converged = true;
    os << format_number(a) << ",1," << format_number(r.value) << "," << format_number(r.spread()) << ","
       << r.restarts << "," << r.best_restart << "," << to_string(r.status) << "\n";
    if (f.n_max > 1) {
      const RegularizationEstimate est = eop_regularized_estimate(rho, a, f.n_max, opts);
      for (const auto& [n, v] : est.per_n)
        if (n > 1) os << format_number(a) << "," << n << "," << format_number(v) << ",,,,\n";
    }
  }
  return os.str();
}

DensityMatrix load_source(const Flags& f) {
  if (!f.state_path.empty()) return load_state_checked(f.state_path);
  return ensemble_to_source(load_ensemble_checked(f.ensemble_path));
}

std::string cmd_bound(Flags& f, RunConfig& cfg) {
  if (f.alphas.empty()) f.alphas = exponent_alpha_grid();
  if (f.ns.empty()) f.ns = {1};
  const BoundMode mode = parse_mode(f.mode);
  cfg.set(f.state_path.empty() ? "ensemble" : "state", f.state_path.empty() ? f.ensemble_path : f.state_path);
  cfg.set("mode", f.mode);
  cfg.set("rates", join_numbers(f.rates));
  cfg.set("n", join_ints(f.ns));
  cfg.set("alpha", join_numbers(f.alphas));
  cfg.set("exponent", f.exponent ? "1" : "0");
  if (mode == BoundMode::visible) f.eop.record(cfg);
  const DensityMatrix rho = load_source(f);

  std::ostringstream os;
  os << cfg.header() << bound_csv_header() << "\n";
  std::optional<KIDecomposition> d;
  if (mode == BoundMode::blind) {
    KIOptions ko;
    ko.seed = cfg.seed;
    d = ki_decompose(rho, ko);
  }
  VisibleOptions vo;
  vo.eop = f.eop.options(cfg.seed);
  for (double q : f.rates)
    for (int n : f.ns)
      for (double a : f.alphas)
        os << bound_csv_row(d ? blind_bound(*d, q, n, a) : visible_bound(rho, q, n, a, vo)) << "\n";

  if (f.exponent) {
    os << "\nmode,Q,n,K,alpha_star\n";
    for (double q : f.rates)
      for (int n : f.ns) {
        const ExponentReport rep = d ? blind_exponent(*d, q) : visible_exponent(rho, q, n, vo.eop);
        os << f.mode << "," << format_number(q) << "," << n << "," << format_number(rep.K) << ","
           << rep.alpha_star_text() << "\n";
      }
  }
  return os.str();
}

std::string cmd_simulate(Flags& f, RunConfig& cfg) {
  const Ensemble e = load_ensemble_checked(f.ensemble_path);
  int m = f.m_dim;
  if (m <= 0) {
    if (f.rate < 0.0) throw ValidationError("simulate: one of --m-dim or --rate is required");
    long block = 1;
    for (int k = 0; k < f.n && block <= kMaxStateDim; ++k) block *= e.dim();
    m = compressed_dim(static_cast<int>(std::min<long>(block, kMaxStateDim + 1)), f.n, f.rate);
  }
  cfg.set("ensemble", f.ensemble_path);
  cfg.set("mode", f.mode);
  cfg.set("n", std::to_string(f.n));
  cfg.set("m_dim", std::to_string(m));
  f.sim.record(cfg);

  const SimOptions opts = f.sim.options(cfg.seed);
  const SchemeResult r = parse_mode(f.mode) == BoundMode::visible ? optimize_visible_scheme(e, f.n, m, opts)
                                                                  : optimize_blind_scheme(e, f.n, m, opts);
  if (!f.scheme_out.empty()) io::write_file(f.scheme_out, io::to_json(r.scheme));

  std::ostringstream os;
  os << cfg.header() << "mode,n,m_dim,Q_tested,fidelity,best_restart,restarts\n";
  os << f.mode << "," << f.n << "," << m << "," << format_number(std::log2(static_cast<double>(m)) / f.n) << ","
     << format_number(r.fidelity) << "," << r.best_restart << "," << r.per_restart.size() << "\n\n";
  os << "restart,fidelity\n";
  for (std::size_t k = 0; k < r.per_restart.size(); ++k) os << k << "," << format_number(r.per_restart[k]) << "\n";
  return os.str();
}

std::string cmd_sweep(Flags& f, RunConfig& cfg) {
  if (f.ns.empty()) f.ns = {1};
  cfg.set("ensemble", f.ensemble_path);
  cfg.set("mode", f.mode);
  cfg.set("rates", join_numbers(f.rates));
  cfg.set("n", join_ints(f.ns));
  f.sim.record(cfg);
  if (f.mode != "blind") f.eop.record(cfg, "eop_");
  const Ensemble e = load_ensemble_checked(f.ensemble_path);

  SweepOptions so;
  so.blind = f.mode != "visible";
  so.visible = f.mode != "blind";
  so.sim = f.sim.options(cfg.seed);
  so.eop = f.eop.options(cfg.seed);
  std::ostringstream os;
  os << cfg.header() << sweep_csv_header() << "\n";
  for (const SweepRow& row : sweep(e, f.rates, f.ns, so)) os << sweep_csv_row(row) << "\n";
  return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum source compression toolkit", "qsc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  Flags f;

  const auto modes = CLI::IsMember({"blind", "visible"});
  CLI::App* entropy = app.add_subcommand("entropy", "Renyi entropies of a state file");
  entropy->add_option("--state", f.state_path, "State JSON file")->required()->check(CLI::ExistingFile);
  entropy->add_option("--alpha", f.alphas, "Renyi orders (1 selects von Neumann)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  entropy->add_option("--keep", f.keep, "Factor labels of the marginal to evaluate")->delimiter(',');

  CLI::App* ki = app.add_subcommand("ki", "Koashi-Imoto decomposition of a source on {A, R}");
  ki->add_option("--state", f.state_path, "Source JSON file")->required()->check(CLI::ExistingFile);
  ki->add_option("--alpha", f.alphas, "Orders for the S_alpha(CQ) table")->delimiter(',')->check(CLI::PositiveNumber);
  ki->add_option("--max-rounds", f.ki_max_rounds, "Refinement rounds")->check(CLI::PositiveNumber);

  CLI::App* eop_cmd = app.add_subcommand("eop", "Renyi entanglement of purification");
  eop_cmd->add_option("--state", f.state_path, "Source JSON file")->required()->check(CLI::ExistingFile);
  eop_cmd->add_option("--alpha", f.alphas, "Renyi orders")->delimiter(',')->check(CLI::PositiveNumber);
  eop_cmd->add_option("--n-max", f.n_max, "Largest block length of the regularization estimate")
      ->check(CLI::Range(1, 8));
  eop_cmd->add_flag("--strict", f.strict, "Exit 3 when a best restart stops at the iteration limit");
  f.eop.bind(eop_cmd);

  CLI::App* bound = app.add_subcommand("bound", "Strong-converse fidelity bounds");
  auto* bound_state = bound->add_option("--state", f.state_path, "Source JSON file on {A, R}")->check(CLI::ExistingFile);
  auto* bound_ens = bound->add_option("--ensemble", f.ensemble_path, "Ensemble JSON file")->check(CLI::ExistingFile);
  bound_state->excludes(bound_ens);
  bound->add_option("--mode", f.mode, "blind or visible")->check(modes)->capture_default_str();
  bound->add_option("--rates", f.rates, "Rates Q in qubits per copy")->required()->delimiter(',');
  bound->add_option("--n", f.ns, "Block lengths")->delimiter(',')->check(CLI::PositiveNumber);
  bound->add_option("--alpha", f.alphas, "Orders alpha > 1 (default: exponent grid)")->delimiter(',');
  bound->add_flag("--exponent", f.exponent, "Append the grid supremum of the exponent");
  f.eop.bind(bound);

  CLI::App* simulate = app.add_subcommand("simulate", "Optimize a compression scheme for an ensemble");
  simulate->add_option("--ensemble", f.ensemble_path, "Ensemble JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--mode", f.mode, "blind or visible")->check(modes)->capture_default_str();
  simulate->add_option("--n", f.n, "Block length")->check(CLI::PositiveNumber)->capture_default_str();
  auto* sim_m = simulate->add_option("--m-dim", f.m_dim, "Dimension of the compressed system")->check(CLI::PositiveNumber);
  auto* sim_rate = simulate->add_option("--rate", f.rate, "Rate Q; m_dim = 2^ceil(nQ)")->check(CLI::NonNegativeNumber);
  sim_m->excludes(sim_rate);
  simulate->add_option("--scheme-out", f.scheme_out, "Write the optimized scheme as JSON");
  f.sim.bind(simulate);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Rate-fidelity table with bound columns");
  sweep_cmd->add_option("--ensemble", f.ensemble_path, "Ensemble JSON file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--mode", f.mode, "blind, visible or both")
      ->check(CLI::IsMember({"blind", "visible", "both"}))
      ->capture_default_str();
  sweep_cmd->add_option("--rates", f.rates, "Rates Q in qubits per copy")->required()->delimiter(',');
  sweep_cmd->add_option("--n", f.ns, "Block lengths")->delimiter(',')->check(CLI::PositiveNumber);
  f.sim.bind(sweep_cmd);
  f.eop.bind(sweep_cmd, "eop-");

  const std::pair<CLI::App*, std::uint64_t> seeded[] = {{entropy, 0},   {ki, KIOptions{}.seed},
                                                        {eop_cmd, EopOptions{}.seed}, {bound, EopOptions{}.seed},
                                                        {simulate, SimOptions{}.seed}, {sweep_cmd, SimOptions{}.seed}};
  for (const auto& [sub, seed] : seeded) {
    sub->add_option("--out,-o", f.out_path, "Write output to this file instead of stdout");
    sub->add_option("--seed", f.seed, "Base random seed (default " + std::to_string(seed) + ")");
  }

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("qsc");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "qsc: " << e.what() << "\n";
    return kExitValidation;
  }

  RunConfig cfg;
  for (const auto& [sub, seed] : seeded)
    if (sub->parsed()) {
      cfg.command = sub->get_name();
      if (sub->count("--seed") == 0) f.seed = seed;
    }
  cfg.seed = f.seed;

  try {
    std::string text;
    bool not_converged = false;
    if (entropy->parsed()) {
      text = cmd_entropy(f, cfg);
    } else if (ki->parsed()) {
      text = cmd_ki(f, cfg);
    } else if (eop_cmd->parsed()) {
      text = cmd_eop(f, cfg, not_converged);
    } else if (bound->parsed()) {
      if (f.state_path.empty() && f.ensemble_path.empty())
        throw ValidationError("bound: one of --state or --ensemble is required");
      text = cmd_bound(f, cfg);
    } else if (simulate->parsed()) {
      text = cmd_simulate(f, cfg);
    } else {
      text = cmd_sweep(f, cfg);
    }

    if (f.out_path.empty()) {
      out << text;
    } else {
      std::ofstream file(f.out_path, std::ios::binary);
      if (!file) throw ValidationError("cannot write '" + f.out_path + "'");
      file << text;
    }
    if (not_converged && f.strict) {
      err << "qsc: a best restart stopped at the iteration limit\n";
      return kExitConvergence;
    }
    return kExitOk;
  } catch (const ConvergenceError& e) {
    err << "qsc: not converged: " << e.what() << " (residual " << format_number(e.residual()) << ")\n";
    return kExitConvergence;
  } catch (const ValidationError& e) {
    err << "qsc: invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LabelError& e) {
    err << "qsc: invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DimensionError& e) {
    err << "qsc: invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const BudgetError& e) {
    err << "qsc: problem too large: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "qsc: error: " << e.what() << "\n";
    return kExitError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qsc::cli
