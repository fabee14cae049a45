// Command-line front end. Talks to the library only through damopt.h.
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "damopt.h"

#ifndef DAMOPT_PRESET_DIR
#define DAMOPT_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;

namespace {

struct CliError {
  damopt_status status;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError{DAMOPT_E_USAGE, msg}; }

void check(damopt_status s) {
  if (s != DAMOPT_OK) throw CliError{s, damopt_last_error()};
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key -> default ("" means unset unless a source sets it)
const std::vector<std::pair<std::string, std::string>> kKeys = {
    {"schema", "1"},         {"nodes", "2"},          {"lambda", "1"},
    {"zeta", "1"},           {"n0", "1"},             {"capacity", "3"},
    {"solver", "symmetric"}, {"K", "0"},              {"p0plus", "0.001"},
    {"grid_n", "512"},       {"theta_tol", "0.01"},   {"max_outer", "100"},
    {"ode_substeps", "4"},   {"init", "linear"},      {"search", "false"},
    {"search_p0plus", ""},   {"search_K", ""},        {"ascent_guard", "false"},
    {"strict_ascent", "false"}, {"keep_iterates", "false"},
    {"sweep.L", ""},         {"sweep.K", ""},         {"sweep.p0plus", ""},
    {"sweep.best_K", ""},    {"sweep.save_policies", "false"},
    {"policy", ""},          {"policy.constant", ""}, {"policy.extent", ""},
    {"policy.intervals", "4000"}, {"packets", "exponential"},
    {"horizon", "100000"},   {"replications", "10"},  {"seed", "1"},
    {"burn_in", "100"},      {"probes", ""},          {"initial_level", "0"},
    {"cdf_points", "1000"},  {"cdf_max", "0"},        {"event_log", "false"},
    {"workers", "1"},
};

class Config {
 public:
  Config() {
    for (const auto& [k, v] : kKeys) {
      known_.insert(k);
      if (!v.empty()) values_[k] = {v, "default"};
    }
  }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!known_.count(key)) usage_error(origin + ": unknown config key '" + key + "'");
    values_[key] = {value, origin};
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError{DAMOPT_E_IO, "cannot open config file '" + path + "'"};
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = path + ":" + std::to_string(n);
      if (eq == std::string::npos) usage_error(where + ": expected 'key = value'");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
    if (get_string("schema") != "1")
      usage_error(path + ": unsupported schema '" + get_string("schema") + "' (expected 1)");
  }

  void apply_env() {
    for (const auto& key : known_) {
      std::string name = "DAMOPT_";
      for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (const char* v = std::getenv(name.c_str())) set(key, v, "environment " + name);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? "" : it->second.first;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

  std::size_t get_size(const std::string& key) const {
    const std::string v = get_string(key);
    std::size_t pos = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos != v.size() || v.empty() || x < 0) bad(key, "a non-negative integer");
    return static_cast<std::size_t>(x);
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad(key, "a boolean");
  }

  // Comma-separated numbers; nullopt when the key was never set.
  std::optional<std::vector<double>> get_list(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
  }

  // lo:hi:step, inclusive
  std::vector<double> get_range(const std::string& key) const {
    const std::string v = get_string(key);
    const auto a = v.find(':'), b = v.rfind(':');
    if (a == std::string::npos || a == b) bad(key, "a range lo:hi:step");
    const double lo = parse_double(key, v.substr(0, a));
    const double hi = parse_double(key, v.substr(a + 1, b - a - 1));
    const double step = parse_double(key, v.substr(b + 1));
    if (!(step > 0.0) || hi < lo) bad(key, "a range lo:hi:step with step > 0 and lo <= hi");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(std::round((lo + step * static_cast<double>(i)) * 1e10) / 1e10);
    return out;
  }

 private:
  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    const auto it = values_.find(key);
    const std::string origin = it == values_.end() ? "unset" : it->second.second;
    usage_error("config key '" + key + "' (" + origin + "): expected " + what + ", got '" +
                get_string(key) + "'");
  }

  double parse_double(const std::string& key, const std::string& v) const {
    const std::string t = trim(v);
    if (t == "inf" || t == "infinity") return INFINITY;
    std::size_t pos = 0;
    double x = 0;
    try {
      x = std::stod(t, &pos);
    } catch (...) {
      pos = 0;
    }
    if (t.empty() || pos != t.size()) bad(key, "a number");
    return x;
  }

  std::set<std::string> known_;
  std::map<std::string, std::pair<std::string, std::string>> values_;
};

std::string num(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct Experiment {
  Config cfg;
  std::string out_dir;
};

std::vector<damopt_params> node_params(const Config& cfg, double capacity) {
  const std::size_t m = cfg.get_size("nodes");
  if (m < 1) usage_error("config key 'nodes': must be >= 1");
  const auto lam = *cfg.get_list("lambda");
  const auto zet = *cfg.get_list("zeta");
  auto pick = [m](const std::vector<double>& v, std::size_t k, const char* key) {
    if (v.size() == 1) return v[0];
    if (v.size() != m)
      usage_error(std::string("config key '") + key + "': needs 1 or " + std::to_string(m) + " values");
    return v[k];
  };
  std::vector<damopt_params> out;
  for (std::size_t k = 0; k < m; ++k)
    out.push_back({pick(lam, k, "lambda"), pick(zet, k, "zeta"), capacity});
  return out;
}

damopt_solver_config solver_config(const Config& cfg, double K, double p0plus,
                                   std::vector<double>& sp, std::vector<double>& sk) {
  damopt_solver_config c;
  damopt_solver_config_default(&c);
  c.K = K;
  c.p0plus = p0plus;
  c.grid_n = cfg.get_size("grid_n");
  c.theta_tol = cfg.get_double("theta_tol");
  c.max_outer = cfg.get_size("max_outer");
  c.ode_substeps = cfg.get_size("ode_substeps");
  const std::string init = cfg.get_string("init");
  if (init == "linear") c.init = DAMOPT_INIT_LINEAR;
  else if (init == "constant") c.init = DAMOPT_INIT_CONSTANT;
  else if (init == "sqrt") c.init = DAMOPT_INIT_SQRT;
  else usage_error("config key 'init': expected linear, constant or sqrt, got '" + init + "'");
  c.search = cfg.get_bool("search") ? 1 : 0;
  sp = cfg.get_list("search_p0plus").value_or(std::vector<double>{});
  sk = cfg.get_list("search_K").value_or(std::vector<double>{});
  c.search_p0plus = sp.data();
  c.search_p0plus_count = sp.size();
  c.search_K = sk.data();
  c.search_K_count = sk.size();
  c.ascent_guard = cfg.get_bool("ascent_guard") ? 1 : 0;
  c.strict_ascent = cfg.get_bool("strict_ascent") ? 1 : 0;
  c.keep_iterates = cfg.get_bool("keep_iterates") ? 1 : 0;
  return c;
}

// Owns a report handle.
struct Report {
  damopt_report* h = nullptr;
  Report() = default;
  Report(const Report&) = delete;
  Report(Report&& o) noexcept : h(o.h) { o.h = nullptr; }
  Report& operator=(Report&& o) noexcept {
    std::swap(h, o.h);
    return *this;
  }
  ~Report() { damopt_report_free(h); }
};

Report run_solve(const Config& cfg, double L, double K, double p0plus) {
  const auto nodes = node_params(cfg, L);
  std::vector<double> sp, sk;
  const auto sc = solver_config(cfg, K, p0plus, sp, sk);
  const std::string solver = cfg.get_string("solver");
  Report r;
  const double n0 = cfg.get_double("n0");
  if (solver == "symmetric") {
    check(damopt_solve_symmetric(nodes.size(), &nodes[0], n0, &sc, &r.h));
  } else if (solver == "gauss_seidel") {
    check(damopt_solve_gauss_seidel(nodes.data(), nodes.size(), n0, &sc, 1, &r.h));
  } else {
    usage_error("config key 'solver': expected symmetric or gauss_seidel, got '" + solver + "'");
  }
  return r;
}

const char* kHeader = "L,K,p0plus,utility,R_upper,ratio";

std::string row(double L, double K, double p0, std::optional<double> u, double bound) {
  std::ostringstream s;
  s << num(L) << ',' << num(K) << ',' << num(p0) << ',';
  if (u) s << std::setprecision(6) << std::fixed << *u;
  s << ',' << std::setprecision(6) << std::fixed << bound << ',';
  if (u && bound > 0) s << std::setprecision(6) << std::fixed << *u / bound;
  return s.str();
}

void emit(const Experiment& ex, const std::string& file, const std::vector<std::string>& lines) {
  for (const auto& l : lines) std::cout << l << "\n";
  if (ex.out_dir.empty()) return;
  std::ofstream out(fs::path(ex.out_dir) / file);
  if (!out) throw CliError{DAMOPT_E_IO, "cannot write " + (fs::path(ex.out_dir) / file).string()};
  for (const auto& l : lines) out << l << "\n";
}

std::string out_path(const Experiment& ex, const std::string& name) {
  return (fs::path(ex.out_dir) / name).string();
}

void warn(const damopt_report* r) {
  for (std::size_t i = 0; i < damopt_report_warning_count(r); ++i)
    std::cerr << "warning: " << damopt_report_warning(r, i) << "\n";
}

void save_solution(const Experiment& ex, const damopt_report* r, const std::string& tag) {
  for (std::size_t k = 0; k < damopt_report_nodes(r); ++k) {
    damopt_policy* p = nullptr;
    damopt_measure* m = nullptr;
    check(damopt_report_policy(r, k, &p));
    const damopt_status s1 = damopt_policy_save(p, out_path(ex, "policy" + tag + "_" + std::to_string(k) + ".txt").c_str());
    damopt_policy_free(p);
    check(s1);
    check(damopt_report_measure(r, k, &m));
    const damopt_status s2 = damopt_measure_save(m, out_path(ex, "measure" + tag + "_" + std::to_string(k) + ".txt").c_str());
    damopt_measure_free(m);
    check(s2);
  }
}

void save_iterates(const Experiment& ex, const damopt_report* r) {
  const std::size_t n = damopt_report_iterate_count(r);
  if (n == 0) return;
  std::vector<std::vector<double>> cols;
  double extent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    damopt_policy* p = nullptr;
    check(damopt_report_iterate(r, i, &p));
    std::vector<double> v(damopt_policy_size(p));
    const damopt_status s = damopt_policy_values(p, v.data(), v.size());
    extent = damopt_policy_extent(p);
    damopt_policy_free(p);
    check(s);
    cols.push_back(std::move(v));
  }
  std::ofstream out(out_path(ex, "iterates.txt"));
  if (!out) throw CliError{DAMOPT_E_IO, "cannot write iterates.txt"};
  out << "# x p_0 (initial) ... p_" << n - 1 << "\n" << std::setprecision(10);
  const std::size_t size = cols[0].size();
  for (std::size_t j = 0; j < size; ++j) {
    out << extent * static_cast<double>(j) / static_cast<double>(size - 1);
    for (const auto& c : cols) out << ' ' << c[j];
    out << "\n";
  }
}

int cmd_bound(const Experiment& ex) {
  const auto& cfg = ex.cfg;
  const auto caps = cfg.get_list("sweep.L").value_or(std::vector<double>{cfg.get_double("capacity")});
  std::vector<std::string> lines{kHeader};
  for (double L : caps) {
    const auto nodes = node_params(cfg, L);
    double b = 0;
    check(damopt_upper_bound(nodes.data(), nodes.size(), cfg.get_double("n0"), &b));
    std::ostringstream s;
    s << num(L) << ",,,," << std::setprecision(6) << std::fixed << b << ',';
    lines.push_back(s.str());
  }
  emit(ex, "bound.csv", lines);
  return 0;
}

int cmd_solve(const Experiment& ex) {
  const auto& cfg = ex.cfg;
  const double L = cfg.get_double("capacity"), K = cfg.get_double("K"), p0 = cfg.get_double("p0plus");
  Report r = run_solve(cfg, L, K, p0);
  warn(r.h);
  emit(ex, "solve.csv", {kHeader, row(L, K, p0, damopt_report_utility(r.h), damopt_report_upper_bound(r.h))});
  std::cerr << "termination: " << damopt_report_termination(r.h) << " after "
            << damopt_report_iterations(r.h) << " iterations\n";
  if (!ex.out_dir.empty()) {
    check(damopt_report_save(r.h, out_path(ex, "report.txt").c_str()));
    save_solution(ex, r.h, "");
    save_iterates(ex, r.h);
  }
  return 0;
}

struct Cell {
  double L, K, p0;
  std::optional<double> utility;
  double bound = 0;
  std::string error;
  damopt_status status = DAMOPT_OK;
  Report report;
};

void run_cells(const Config& cfg, std::vector<Cell>& cells, std::size_t workers) {
  std::size_t next = 0;
  std::mutex mu;
  auto work = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= cells.size()) return;
        i = next++;
      }
      Cell& c = cells[i];
      try {
        c.report = run_solve(cfg, c.L, c.K, c.p0);
        c.utility = damopt_report_utility(c.report.h);
        c.bound = damopt_report_upper_bound(c.report.h);
      } catch (const CliError& e) {
        c.status = e.status;
        c.error = e.message;
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

double bound_for(const Config& cfg, double L) {
  const auto nodes = node_params(cfg, L);
  double b = 0;
  check(damopt_upper_bound(nodes.data(), nodes.size(), cfg.get_double("n0"), &b));
  return b;
}

int cmd_sweep(const Experiment& ex) {
  const auto& cfg = ex.cfg;
  const auto Ls = cfg.get_list("sweep.L").value_or(std::vector<double>{cfg.get_double("capacity")});
  const auto Ks = cfg.get_list("sweep.K").value_or(std::vector<double>{cfg.get_double("K")});
  const auto Ps = cfg.get_list("sweep.p0plus").value_or(std::vector<double>{cfg.get_double("p0plus")});
  const std::size_t workers = cfg.get_size("workers");
  int status = 0;

  std::vector<Cell> cells;
  for (double L : Ls)
    for (double p0 : Ps)
      for (double K : Ks) cells.push_back({L, K, p0, std::nullopt, 0, "", DAMOPT_OK, {}});
  run_cells(cfg, cells, workers);
  std::vector<std::string> lines{kHeader};
  for (auto& c : cells) {
    if (!c.utility) {
      std::cerr << "error[" << damopt_status_name(c.status) << "]: L=" << num(c.L) << " K=" << num(c.K)
                << " p0plus=" << num(c.p0) << ": " << c.error << "\n";
      status = static_cast<int>(c.status);
      c.bound = bound_for(cfg, c.L);
    } else {
      warn(c.report.h);
    }
    lines.push_back(row(c.L, c.K, c.p0, c.utility, c.bound));
    if (c.utility && !ex.out_dir.empty() && cfg.get_bool("sweep.save_policies"))
      save_solution(ex, c.report.h, "_L" + num(c.L) + "_K" + num(c.K) + "_p" + num(c.p0));
  }
  emit(ex, "sweep.csv", lines);

  if (cfg.has("sweep.best_K") && !cfg.get_string("sweep.best_K").empty()) {
    const auto range = cfg.get_range("sweep.best_K");
    std::vector<std::string> best_lines{kHeader};
    for (double L : Ls) {
      for (double p0 : Ps) {
        std::vector<Cell> search;
        for (double K : range) search.push_back({L, K, p0, std::nullopt, 0, "", DAMOPT_OK, {}});
        run_cells(cfg, search, workers);
        // Non-admissible or overflowing K values are part of the search, not failures.
        const Cell* best = nullptr;
        for (const auto& c : search)
          if (c.utility && (!best || *c.utility > *best->utility)) best = &c;
        if (!best) {
          std::cerr << "error[NON_ADMISSIBLE]: no admissible K in " << cfg.get_string("sweep.best_K")
                    << " for L=" << num(L) << "\n";
          status = DAMOPT_E_NON_ADMISSIBLE;
          continue;
        }
        best_lines.push_back(row(L, best->K, p0, best->utility, best->bound));
      }
    }
    std::cout << "\n";
    emit(ex, "best_k.csv", best_lines);
  }
  return status;
}

int cmd_simulate(const Experiment& ex) {
  const auto& cfg = ex.cfg;
  const double L = cfg.get_double("capacity");
  const auto nodes = node_params(cfg, L);
  const std::size_t m = nodes.size();
  const double n0 = cfg.get_double("n0");

  std::vector<damopt_policy*> policies(m, nullptr);
  std::vector<damopt_packets*> packets(m, nullptr);
  damopt_stats* stats = nullptr;
  struct Cleanup {
    std::vector<damopt_policy*>& p;
    std::vector<damopt_packets*>& q;
    damopt_stats*& s;
    ~Cleanup() {
      for (auto* x : p) damopt_policy_free(x);
      for (auto* x : q) damopt_packets_free(x);
      damopt_stats_free(s);
    }
  } cleanup{policies, packets, stats};

  if (!cfg.get_string("policy").empty()) {
    for (auto& p : policies) check(damopt_policy_load(cfg.get_string("policy").c_str(), &p));
  } else if (!cfg.get_string("policy.constant").empty()) {
    double extent = std::isfinite(L) ? L : 40.0 / nodes[0].zeta;
    if (!cfg.get_string("policy.extent").empty()) extent = cfg.get_double("policy.extent");
    for (auto& p : policies)
      check(damopt_policy_constant(extent, cfg.get_size("policy.intervals"),
                                   cfg.get_double("policy.constant"), &p));
  } else {
    Report r = run_solve(cfg, L, cfg.get_double("K"), cfg.get_double("p0plus"));
    warn(r.h);
    for (std::size_t k = 0; k < m; ++k) check(damopt_report_policy(r.h, k, &policies[k]));
  }

  const std::string pk = cfg.get_string("packets");
  for (std::size_t k = 0; k < m; ++k) {
    if (pk == "exponential") check(damopt_packets_exponential(nodes[k].zeta, &packets[k]));
    else check(damopt_packets_load(pk.c_str(), &packets[k]));
  }

  damopt_sim_config sc;
  damopt_sim_config_default(&sc);
  sc.horizon = cfg.get_double("horizon");
  sc.replications = cfg.get_size("replications");
  sc.seed = cfg.get_size("seed");
  sc.burn_in = cfg.get_double("burn_in");
  const auto probes = cfg.get_list("probes").value_or(std::vector<double>{});
  sc.probes = probes.data();
  sc.probe_count = probes.size();
  sc.initial_level = cfg.get_double("initial_level");
  sc.cdf_points = cfg.get_size("cdf_points");
  sc.cdf_max = cfg.get_double("cdf_max");
  sc.workers = cfg.get_size("workers");
  sc.event_log = cfg.get_bool("event_log") ? 1 : 0;
  std::vector<const damopt_policy*> cp(policies.begin(), policies.end());
  std::vector<const damopt_packets*> cq(packets.begin(), packets.end());
  check(damopt_simulate(nodes.data(), cp.data(), cq.data(), m, n0, &sc, &stats));

  double tp = 0, tp_se = 0;
  check(damopt_stats_throughput(stats, &tp, &tp_se));
  std::cout << std::setprecision(6) << "throughput = " << tp << " +- " << tp_se << "\n";
  if (!ex.out_dir.empty()) check(damopt_stats_save(stats, out_path(ex, "stats.txt").c_str()));

  for (std::size_t k = 0; k < m; ++k) {
    damopt_node_summary s;
    check(damopt_stats_node(stats, k, &s));
    std::cout << "node " << k << ": atom = " << s.atom << " +- " << s.atom_se
              << ", mean_power = " << s.mean_power << " +- " << s.mean_power_se
              << ", power_variance = " << s.power_variance << " +- " << s.power_variance_se
              << ", overflow_rate = " << s.overflow_rate << "\n";
    // Analytic comparison where a stationary measure is available.
    damopt_measure* meas = nullptr;
    damopt_status ms = pk == "exponential"
                           ? damopt_measure_closed_form(policies[k], &nodes[k], &meas)
                           : damopt_measure_volterra(policies[k], &nodes[k], packets[k], &meas);
    if (ms != DAMOPT_OK) {
      std::cerr << "warning: no analytic measure for node " << k << ": " << damopt_last_error() << "\n";
      continue;
    }
    double ks = 0;
    damopt_stats_ks(stats, k, meas, policies[k], &ks);
    std::cout << "node " << k << ": analytic atom = " << damopt_measure_atom(meas)
              << ", ks_distance = " << ks << "\n";
    if (!probes.empty()) {
      int ok = 0;
      double z = 0;
      const std::string path = ex.out_dir.empty() ? "" : out_path(ex, "crossings_" + std::to_string(k) + ".txt");
      const damopt_status cs = damopt_stats_crossing_balance(
          stats, k, meas, policies[k], &nodes[k], packets[k], path.empty() ? nullptr : path.c_str(), &ok, &z);
      damopt_measure_free(meas);
      check(cs);
      std::cout << "node " << k << ": crossing balance " << (ok ? "within" : "outside")
                << " 3 standard errors (max |z| = " << z << ")\n";
    } else {
      damopt_measure_free(meas);
    }
  }
  return 0;
}

fs::path preset_path(const std::string& name) {
  if (name.find('/') != std::string::npos || name.ends_with(".conf")) return name;
  return fs::path(DAMOPT_PRESET_DIR) / (name + ".conf");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power policies, throughput bounds and simulation for energy-harvesting multiple access"};
  app.require_subcommand(1, 1);
  std::string config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> sets;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--preset", preset, "named preset (table1, table2, fig1, fig2, fig3, constant, p2p)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--workers", workers, "parallel workers");
    sub->add_option("--set", sets, "override: key=value (repeatable)");
  };
  auto* bound = app.add_subcommand("bound", "upper bounds over a capacity sweep");
  auto* solve = app.add_subcommand("solve", "solve for a power policy");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation of the battery dynamics");
  auto* sweep = app.add_subcommand("sweep", "utility table over (L, K, p0plus)");
  for (auto* s : {bound, solve, simulate, sweep}) add_common(s);
  CLI11_PARSE(app, argc, argv);

  try {
    Experiment ex;
    if (!preset.empty()) {
      const fs::path p = preset_path(preset);
      if (!fs::exists(p)) throw CliError{DAMOPT_E_IO, "unknown preset '" + preset + "' (" + p.string() + ")"};
      ex.cfg.load(p.string());
    }
    if (!config_path.empty()) ex.cfg.load(config_path);
    ex.cfg.apply_env();
    if (seed) ex.cfg.set("seed", std::to_string(*seed), "--seed");
    if (workers) ex.cfg.set("workers", std::to_string(*workers), "--workers");
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) usage_error("--set expects key=value, got '" + s + "'");
      ex.cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)), "--set");
    }
    ex.out_dir = out_dir;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    if (*bound) return cmd_bound(ex);
    if (*solve) return cmd_solve(ex);
    if (*simulate) return cmd_simulate(ex);
    return cmd_sweep(ex);
  } catch (const CliError& e) {
    std::cerr << "error[" << damopt_status_name(e.status) << "]: " << e.message << "\n";
    return static_cast<int>(e.status);
  } catch (const std::exception& e) {
    std::cerr << "error[INTERNAL]: " << e.what() << "\n";
    return DAMOPT_E_INTERNAL;
  }
}
