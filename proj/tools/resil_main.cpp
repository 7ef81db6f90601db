// resil: model scaffolding, criticality tables, safety checks, optimal
// architecture assignment, adversarial simulation and scenario sweeps.
//
// Exit codes: 0 safe/success, 1 usage or input error, 2 unsafe verdict,
// 3 no feasible assignment, 4 simulation abort.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cps/assignment.hpp"
#include "cps/criticality.hpp"
#include "cps/hash.hpp"
#include "cps/model.hpp"
#include "cps/polynomial.hpp"
#include "cps/safety.hpp"
#include "cps/simulation.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnsafe = 2;
constexpr int kExitNoSolution = 3;
constexpr int kExitAbort = 4;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string file_fingerprint(const std::string& path) {
  return hex64(cps::fnv1a64(read_file_bytes(path)));
}

std::string dir_of(const std::string& path) {
  std::string d = std::filesystem::path(path).parent_path().string();
  return d.empty() ? std::string(".") : d;
}

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

// One manifest per output directory, overwritten on rerun. Wall time is the
// only field expected to differ between identical runs; the primary outputs
// themselves stay byte-identical.
void write_manifest(const std::string& dir, const std::string& command,
                    nlohmann::json arguments, nlohmann::json settings,
                    const std::string& model_path, double walltime) {
  nlohmann::json j;
  j["tool"] = "resil";
  j["version"] = kVersion;
  j["command"] = command;
  j["arguments"] = std::move(arguments);
  j["settings"] = std::move(settings);
  if (!model_path.empty())
    j["model"] = {{"path", model_path},
                  {"fnv1a64", file_fingerprint(model_path)}};
  j["walltime_seconds"] = walltime;
  write_json_file(j, dir + "/manifest.json");
}

cps::SlopeOrder parse_order(const std::string& s) {
  return s == "listed" ? cps::SlopeOrder::listed : cps::SlopeOrder::sorted;
}

cps::Model load_valid_model(const std::string& path) {
  cps::Model m = cps::load_model(path);
  const auto diags = m.validate();
  if (!diags.empty()) {
    for (const auto& d : diags)
      std::cerr << "model: " << d.code << ": " << d.message << "\n";
    throw std::runtime_error("model file fails validation");
  }
  return m;
}

// The CSV does not carry the band width; it is pinned by the model.
cps::SciTable load_sci_for(const cps::Model& m, const std::string& path) {
  cps::SciTable t = cps::read_sci_csv(path);
  if (t.subsystems() != m.N())
    throw std::runtime_error("rate table covers " +
                             std::to_string(t.subsystems()) +
                             " subsystems, model has " + std::to_string(m.N()));
  if (t.segments() < 1) throw std::runtime_error("rate table is empty");
  t.delta = m.c / t.segments();
  return t;
}

std::vector<cps::DegradationProfile> build_profiles(const cps::Model& m,
                                                    const cps::SciTable& sci,
                                                    cps::SlopeOrder order) {
  std::vector<cps::DegradationProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(m.N()));
  for (int i = 0; i < m.N(); ++i)
    profiles.push_back(
        cps::profile_from_segments(sci.delta, sci.rates(i), order));
  return profiles;
}

nlohmann::json sci_to_json(const cps::SciTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& e : row)
      r.push_back({{"rho", e.rho},
                   {"engine", e.engine},
                   {"margin", e.margin},
                   {"status", e.status}});
    rows.push_back(std::move(r));
  }
  return {{"delta", t.delta}, {"rows", std::move(rows)}};
}

int arch_index(const cps::Model& m, const std::string& id) {
  for (std::size_t a = 0; a < m.architectures.size(); ++a)
    if (m.architectures[a].id == id) return static_cast<int>(a);
  throw std::runtime_error("unknown architecture id " + id);
}

// Onset chain in the given visiting order: each subsystem starts a fraction
// (1 - phi) of the previous compromise after it. phi 0 is sequential, 1 is
// simultaneous.
cps::AttackScenario chain_scenario(const std::vector<double>& times, double t0,
                                   double phi, const std::vector<int>& order) {
  const int n = static_cast<int>(times.size());
  cps::AttackScenario sc;
  sc.t0 = t0;
  sc.duration = times;
  sc.start.assign(static_cast<std::size_t>(n), -1.0);
  double onset = t0;
  for (int k = 0; k < n; ++k) {
    const int i = order[static_cast<std::size_t>(k)];
    sc.start[static_cast<std::size_t>(i)] = onset;
    onset += (1.0 - phi) * times[static_cast<std::size_t>(i)];
  }
  sc.tf = t0;
  for (int i = 0; i < n; ++i)
    sc.tf = std::max(sc.tf, sc.start[static_cast<std::size_t>(i)] +
                                sc.duration[static_cast<std::size_t>(i)]);
  return sc;
}

std::vector<int> identity_order(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Fisher-Yates with explicit draws so the sweep is reproducible across
// standard libraries.
std::vector<int> random_order(int n, std::mt19937_64& rng) {
  std::vector<int> p = identity_order(n);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

std::string order_label(const std::vector<int>& order) {
  std::string s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k) s += "-";
    s += std::to_string(order[k] + 1);
  }
  return s;
}

struct CertVerdict {
  bool known = false;
  bool safe = false;
  double margin = 0.0;
  std::string source;
};

std::string agreement_flag(const CertVerdict& cert, bool sim_safe) {
  if (!cert.known) return "UNVERIFIED";
  if (cert.safe) return sim_safe ? "CONSISTENT" : "CONTRADICTION";
  return sim_safe ? "NOT_FALSIFIED" : "UNSAFE_CONFIRMED";
}

// Recovery times from an assignment file written by `assign`, resolved
// against the model catalog.
std::vector<double> times_from_assignment(const cps::Model& m,
                                          const std::string& path,
                                          CertVerdict* cert) {
  nlohmann::json j;
  {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    in >> j;
  }
  if (!j.value("found", false))
    throw std::runtime_error("assignment file records NO_SOLUTION");
  const auto ids = j.at("mapping").get<std::vector<std::string>>();
  if (static_cast<int>(ids.size()) != m.N())
    throw std::runtime_error("assignment covers " +
                             std::to_string(ids.size()) +
                             " subsystems, model has " + std::to_string(m.N()));
  std::vector<double> times;
  times.reserve(ids.size());
  for (const std::string& id : ids)
    times.push_back(
        m.architectures[static_cast<std::size_t>(arch_index(m, id))]
            .recovery_time);
  if (cert) {
    cert->known = true;
    cert->safe = j.value("safe", false);
    cert->margin = j.value("margin", 0.0);
    cert->source = path;
  }
  return times;
}

cps::AttackScenario scenario_from_json(const std::string& path) {
  nlohmann::json j;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  in >> j;
  cps::AttackScenario sc;
  sc.t0 = j.at("t0").get<double>();
  sc.tf = j.at("tf").get<double>();
  sc.start = j.at("start").get<std::vector<double>>();
  sc.duration = j.at("duration").get<std::vector<double>>();
  return sc;
}

void write_plot_files(const cps::Trajectory& tr, const std::string& dir) {
  {
    std::ofstream out(dir + "/plot_h.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/plot_h.csv");
    out << "t,h,phase\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k)
      out << cps::format_double(tr.t[k]) << ","
          << cps::format_double(tr.h[k]) << "," << tr.phase[k] << "\n";
  }
  {
    std::ofstream out(dir + "/plot_u.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/plot_u.csv");
    out << "t";
    for (Eigen::Index k = 0; k < tr.u.cols(); ++k) out << ",u_" << (k + 1);
    out << "\n";
    for (std::size_t row = 0; row < tr.t.size(); ++row) {
      out << cps::format_double(tr.t[row]);
      for (Eigen::Index k = 0; k < tr.u.cols(); ++k)
        out << "," << cps::format_double(tr.u(static_cast<Eigen::Index>(row), k));
      out << "\n";
    }
  }
}

void write_event_csv(const cps::Trajectory& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "time,subsystem,kind\n";
  for (const auto& e : tr.events)
    out << cps::format_double(e.time) << "," << (e.subsystem + 1) << ","
        << e.kind << "\n";
}

// ---------------------------------------------------------------- commands

struct InitArgs {
  std::string kind;
  int n = 3;
  std::string out = "model.json";
};

int run_init(const InitArgs& a) {
  Stopwatch clock;
  if (a.n < 2) {
    std::cerr << "init: --n must be at least 2\n";
    return kExitUsage;
  }
  cps::Model m = cps::build_room_model(a.n);
  m.architectures = {{"A1", 0.0005, 50.0},
                     {"A2", 0.002, 20.0},
                     {"A3", 0.009192, 10.0},
                     {"A4", 0.05, 4.0},
                     {"A5", 0.100917, 1.0}};
  const auto diags = m.validate();
  for (const auto& d : diags)
    std::cerr << "init: " << d.code << ": " << d.message << "\n";
  if (!diags.empty()) return kExitUsage;

  ensure_dir(dir_of(a.out));
  cps::save_model(m, a.out);
  write_manifest(dir_of(a.out), "init",
                 {{"kind", a.kind}, {"n", a.n}, {"out", a.out}},
                 nlohmann::json::object(), a.out, clock.seconds());
  std::cout << "wrote " << a.out << " (" << a.n << " rooms, "
            << m.architectures.size() << " architectures, 0 diagnostics)\n";
  return kExitOk;
}

struct IndicesArgs {
  std::string model;
  std::string engine = "sos";
  std::string fallback = "grid";
  int k_override = 0;
  int resolution = 41;
  int degree = 2;
  std::string out_dir = "sci";
};

int run_indices(const IndicesArgs& a) {
  Stopwatch clock;
  cps::Model m = load_valid_model(a.model);
  if (a.k_override > 0) m.K = a.k_override;

  cps::GridSettings grid{a.resolution};
  cps::SosSettings sos;
  sos.multiplier_degree = a.degree;

  cps::SciTable table;
  if (a.engine == "grid") {
    table = cps::compute_sci_table(m, cps::Engine::grid, grid, sos);
  } else if (a.fallback == "grid") {
    table = cps::compute_sci_table(m, cps::Engine::sos, grid, sos);
  } else {
    // no fallback: keep per-entry failures visible
    table.delta = m.segment_width();
    table.rows.resize(static_cast<std::size_t>(m.N()));
    for (int i = 0; i < m.N(); ++i)
      for (int j = 1; j <= m.K; ++j)
        table.rows[static_cast<std::size_t>(i)].push_back(
            cps::sci_sos(m, i, j, sos));
  }

  int failed = 0;
  for (const auto& row : table.rows)
    for (const auto& e : row)
      if (e.status != "ok" && e.status != "ok-clamped") ++failed;

  // timing lives in the manifest; the table files must rerun byte-identical
  cps::SciTable stable = table;
  for (auto& row : stable.rows)
    for (auto& e : row) e.walltime = 0.0;

  ensure_dir(a.out_dir);
  cps::write_sci_csv(stable, a.out_dir + "/sci.csv");
  write_json_file(sci_to_json(stable), a.out_dir + "/sci.json");
  write_manifest(a.out_dir, "indices",
                 {{"model", a.model},
                  {"engine", a.engine},
                  {"fallback", a.fallback},
                  {"k", a.k_override},
                  {"out_dir", a.out_dir}},
                 {{"resolution", a.resolution},
                  {"multiplier_degree", a.degree}},
                 a.model, clock.seconds());

  for (int i = 0; i < table.subsystems(); ++i)
    std::cout << "subsystem " << (i + 1) << ": worst rate "
              << cps::format_double(table.worst_rate(i)) << " over "
              << table.segments() << " bands\n";
  if (failed)
    std::cerr << failed << " entr" << (failed == 1 ? "y" : "ies")
              << " failed certification\n";
  std::cout << "wrote " << a.out_dir << "/sci.csv, " << a.out_dir
            << "/sci.json\n";
  return failed ? kExitUsage : kExitOk;
}

struct CheckArgs {
  std::string model;
  std::string sci;
  std::vector<double> times;
  std::vector<std::string> archs;
  std::string order = "sorted";
  std::string out;
};

int run_check(const CheckArgs& a) {
  Stopwatch clock;
  cps::Model m = load_valid_model(a.model);
  cps::SciTable sci = load_sci_for(m, a.sci);

  std::vector<double> times = a.times;
  if (!a.archs.empty()) {
    if (!times.empty())
      throw std::runtime_error("give either --times or --archs, not both");
    for (const std::string& id : a.archs)
      times.push_back(
          m.architectures[static_cast<std::size_t>(arch_index(m, id))]
              .recovery_time);
  }
  if (static_cast<int>(times.size()) != m.N()) {
    std::cerr << "check: " << times.size() << " recovery times for " << m.N()
              << " subsystems\n";
    return kExitUsage;
  }

  const cps::SlopeOrder order = parse_order(a.order);
  const auto profiles = build_profiles(m, sci, order);
  const cps::SafetyVerdict v = cps::check_segmented_bound(m.c, profiles, times);

  std::vector<double> contributions;
  for (int i = 0; i < m.N(); ++i) {
    const double d = profiles[static_cast<std::size_t>(i)].value(
                         times[static_cast<std::size_t>(i)]) +
                     0.0;  // normalize -0
    contributions.push_back(d);
    std::cout << "subsystem " << (i + 1) << " ("
              << m.subsystems[static_cast<std::size_t>(i)].name << "): time "
              << cps::format_double(times[static_cast<std::size_t>(i)])
              << ", drop " << cps::format_double(d) << "\n";
  }
  for (const auto& note : v.notes) std::cout << "note: " << note << "\n";
  std::cout << "verdict " << (v.safe ? "SAFE" : "UNSAFE") << " margin "
            << cps::format_double(v.margin) << "\n";

  if (!a.out.empty()) {
    nlohmann::json j;
    j["safe"] = v.safe;
    j["margin"] = v.margin;
    j["order"] = a.order;
    j["times"] = times;
    j["contributions"] = contributions;
    j["notes"] = v.notes;
    ensure_dir(dir_of(a.out));
    write_json_file(j, a.out);
    write_manifest(dir_of(a.out), "check",
                   {{"model", a.model},
                    {"sci", a.sci},
                    {"times", times},
                    {"order", a.order},
                    {"out", a.out}},
                   nlohmann::json::object(), a.model, clock.seconds());
  }
  return v.safe ? kExitOk : kExitUnsafe;
}

struct AssignArgs {
  std::string model;
  std::string sci;
  std::string order = "sorted";
  std::string mode = "bnb";
  bool injective = false;
  std::string catalog;
  std::string out = "assignment.json";
};

int run_assign(const AssignArgs& a) {
  Stopwatch clock;
  cps::Model m = load_valid_model(a.model);
  if (!a.catalog.empty()) {
    nlohmann::json j;
    std::ifstream in(a.catalog);
    if (!in) throw std::runtime_error("cannot open " + a.catalog);
    in >> j;
    m.architectures.clear();
    for (const auto& e : j)
      m.architectures.push_back({e.at("id").get<std::string>(),
                                 e.at("recovery_time").get<double>(),
                                 e.at("cost").get<double>()});
  }
  if (m.architectures.empty()) {
    std::cerr << "assign: the architecture catalog is empty\n";
    return kExitUsage;
  }
  cps::SciTable sci = load_sci_for(m, a.sci);

  cps::AssignOptions opts;
  opts.order = parse_order(a.order);
  opts.injective = a.injective;

  cps::Assignment result;
  if (a.mode == "enumerate") {
    try {
      result = cps::enumerate_optimal(m, sci, opts);
    } catch (const std::runtime_error& e) {
      std::cerr << "assign: " << e.what() << "; use --mode bnb\n";
      return kExitUsage;
    }
  } else {
    result = cps::branch_and_bound(m, sci, opts);
  }

  ensure_dir(dir_of(a.out));
  write_json_file(cps::to_json(result, m, sci), a.out);
  write_manifest(dir_of(a.out), "assign",
                 {{"model", a.model},
                  {"sci", a.sci},
                  {"order", a.order},
                  {"mode", a.mode},
                  {"injective", a.injective},
                  {"catalog", a.catalog},
                  {"out", a.out}},
                 nlohmann::json::object(), a.model, clock.seconds());

  if (!result.found) {
    std::cout << "NO_SOLUTION: no mapping keeps the aggregate margin "
                 "nonnegative\n";
    return kExitNoSolution;
  }
  std::cout << "mapping";
  for (int i = 0; i < m.N(); ++i)
    std::cout << " "
              << m.architectures[static_cast<std::size_t>(
                                     result.arch_of[static_cast<std::size_t>(i)])]
                     .id;
  std::cout << " cost " << cps::format_double(result.total_cost) << " margin "
            << cps::format_double(result.verdict.margin) << " ("
            << result.nodes << " placements)\n";
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string model;
  std::string assignment;
  std::vector<double> times;
  std::string sci;
  std::string order = "sorted";
  std::string scenario = "simultaneous";
  double overlap = 0.5;
  std::string scenario_file;
  double t0 = 0.2;
  double step = 1e-4;
  std::string out_dir = "sim";
};

int run_simulate(const SimulateArgs& a) {
  Stopwatch clock;
  cps::Model m = load_valid_model(a.model);

  CertVerdict cert;
  std::vector<double> times = a.times;
  if (!a.assignment.empty()) {
    if (!times.empty())
      throw std::runtime_error("give either --assignment or --times, not both");
    times = times_from_assignment(m, a.assignment, &cert);
  } else if (!times.empty() && !a.sci.empty()) {
    cps::SciTable sci = load_sci_for(m, a.sci);
    const auto profiles = build_profiles(m, sci, parse_order(a.order));
    const cps::SafetyVerdict v =
        cps::check_segmented_bound(m.c, profiles, times);
    cert.known = true;
    cert.safe = v.safe;
    cert.margin = v.margin;
    cert.source = a.sci;
  }

  cps::AttackScenario sc;
  if (a.scenario == "custom") {
    if (a.scenario_file.empty())
      throw std::runtime_error("--scenario custom needs --scenario-file");
    sc = scenario_from_json(a.scenario_file);
  } else {
    if (static_cast<int>(times.size()) != m.N()) {
      std::cerr << "simulate: " << times.size() << " recovery times for "
                << m.N() << " subsystems\n";
      return kExitUsage;
    }
    double phi = 0.0;
    if (a.scenario == "simultaneous") phi = 1.0;
    else if (a.scenario == "sequential") phi = 0.0;
    else phi = a.overlap;
    if (phi < 0.0 || phi > 1.0)
      throw std::runtime_error("overlap fraction must lie in [0, 1]");
    sc = chain_scenario(times, a.t0, phi, identity_order(m.N()));
  }

  const cps::Trajectory tr = cps::run_scenario(m, sc, a.step);
  const bool sim_safe = !tr.aborted && tr.min_h >= 0.0;
  const std::string flag = agreement_flag(cert, sim_safe);

  ensure_dir(a.out_dir);
  cps::write_trajectory_csv(tr, a.out_dir + "/trajectory.csv");
  write_event_csv(tr, a.out_dir + "/events.csv");
  write_plot_files(tr, a.out_dir);

  nlohmann::json summary = cps::summary_json(tr);
  summary["sim_safe"] = sim_safe;
  summary["agreement"] = flag;
  if (cert.known)
    summary["certificate"] = {{"safe", cert.safe},
                              {"margin", cert.margin},
                              {"source", cert.source}};
  else
    summary["certificate"] = nullptr;
  summary["scenario"] = {{"kind", a.scenario},
                         {"t0", sc.t0},
                         {"tf", sc.tf},
                         {"start", sc.start},
                         {"duration", sc.duration}};
  write_json_file(summary, a.out_dir + "/summary.json");
  write_manifest(a.out_dir, "simulate",
                 {{"model", a.model},
                  {"assignment", a.assignment},
                  {"times", times},
                  {"scenario", a.scenario},
                  {"overlap", a.overlap},
                  {"scenario_file", a.scenario_file},
                  {"order", a.order},
                  {"out_dir", a.out_dir}},
                 {{"t0", a.t0}, {"step", a.step}}, a.model, clock.seconds());

  std::cout << "min_h " << cps::format_double(tr.min_h);
  if (tr.return_time)
    std::cout << " return_time " << cps::format_double(*tr.return_time);
  else
    std::cout << " return_time none";
  std::cout << " agreement " << flag << "\n";
  std::cout << "wrote " << a.out_dir << "/trajectory.csv, events.csv, "
            << "plot_h.csv, plot_u.csv, summary.json\n";

  if (tr.aborted) {
    std::cerr << "simulate: state left the finite range at t "
              << cps::format_double(tr.t.back()) << "\n";
    return kExitAbort;
  }
  return sim_safe ? kExitOk : kExitUnsafe;
}

struct SweepArgs {
  std::string model;
  std::string assignment;
  std::vector<double> times;
  std::vector<double> overlaps;
  int orderings = 20;
  unsigned seed = 7;
  double t0 = 0.2;
  double step = 1e-4;
  std::string out_dir = "sweep";
};

int run_sweep(const SweepArgs& a) {
  Stopwatch clock;
  cps::Model m = load_valid_model(a.model);
  if (a.overlaps.empty()) {
    std::cerr << "sweep: --overlaps needs at least one fraction\n";
    return kExitUsage;
  }
  for (double phi : a.overlaps)
    if (phi < 0.0 || phi > 1.0) {
      std::cerr << "sweep: overlap " << cps::format_double(phi)
                << " outside [0, 1]\n";
      return kExitUsage;
    }
  if (a.orderings < 1) {
    std::cerr << "sweep: --orderings must be positive\n";
    return kExitUsage;
  }

  CertVerdict cert;
  std::vector<double> times = a.times;
  if (!a.assignment.empty()) {
    if (!times.empty())
      throw std::runtime_error("give either --assignment or --times, not both");
    times = times_from_assignment(m, a.assignment, &cert);
  }
  if (static_cast<int>(times.size()) != m.N()) {
    std::cerr << "sweep: " << times.size() << " recovery times for " << m.N()
              << " subsystems\n";
    return kExitUsage;
  }

  ensure_dir(a.out_dir);
  std::ofstream csv(a.out_dir + "/sweep.csv");
  if (!csv) throw std::runtime_error("cannot write " + a.out_dir + "/sweep.csv");
  csv << "overlap,ordering,permutation,min_h,return_time,safe\n";

  std::mt19937_64 rng(a.seed);
  double worst = cps::kInf;
  nlohmann::json worst_run;
  int runs = 0;
  bool any_abort = false;
  for (double phi : a.overlaps) {
    for (int r = 0; r < a.orderings; ++r) {
      const std::vector<int> order = random_order(m.N(), rng);
      const cps::AttackScenario sc = chain_scenario(times, a.t0, phi, order);
      const cps::Trajectory tr = cps::run_scenario(m, sc, a.step);
      const bool safe = !tr.aborted && tr.min_h >= 0.0;
      any_abort = any_abort || tr.aborted;
      ++runs;
      csv << cps::format_double(phi) << "," << r << "," << order_label(order)
          << "," << cps::format_double(tr.min_h) << ",";
      if (tr.return_time) csv << cps::format_double(*tr.return_time);
      csv << "," << (safe ? 1 : 0) << "\n";
      if (tr.min_h < worst) {
        worst = tr.min_h;
        worst_run = {{"overlap", phi},
                     {"ordering", r},
                     {"permutation", order_label(order)},
                     {"min_h", tr.min_h}};
      }
    }
  }
  csv.close();

  nlohmann::json summary;
  summary["runs"] = runs;
  summary["worst_min_h"] = worst;
  summary["worst"] = worst_run;
  summary["all_safe"] = !any_abort && worst >= 0.0;
  if (cert.known)
    summary["certificate"] = {{"safe", cert.safe},
                              {"margin", cert.margin},
                              {"source", cert.source}};
  else
    summary["certificate"] = nullptr;
  write_json_file(summary, a.out_dir + "/summary.json");
  write_manifest(a.out_dir, "sweep",
                 {{"model", a.model},
                  {"assignment", a.assignment},
                  {"times", times},
                  {"overlaps", a.overlaps},
                  {"orderings", a.orderings},
                  {"out_dir", a.out_dir}},
                 {{"seed", a.seed}, {"t0", a.t0}, {"step", a.step}}, a.model,
                 clock.seconds());

  std::cout << runs << " runs, worst min_h " << cps::format_double(worst)
            << "\n";
  std::cout << "wrote " << a.out_dir << "/sweep.csv, summary.json\n";
  if (any_abort) return kExitAbort;
  return worst >= 0.0 ? kExitOk : kExitUnsafe;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified criticality, assignment and attack simulation"};
  app.set_version_flag("--version", std::string("resil ") + kVersion);
  app.require_subcommand(1);

  InitArgs init;
  auto* cmd_init = app.add_subcommand("init", "scaffold a model file");
  cmd_init->add_option("kind", init.kind, "model family")
      ->required()
      ->check(CLI::IsMember({"rooms"}));
  cmd_init->add_option("--n", init.n, "number of rooms");
  cmd_init->add_option("--out", init.out, "output model file");

  IndicesArgs indices;
  auto* cmd_indices =
      app.add_subcommand("indices", "compute the certified rate table");
  cmd_indices->add_option("--model", indices.model)->required();
  cmd_indices->add_option("--engine", indices.engine)
      ->check(CLI::IsMember({"grid", "sos"}));
  cmd_indices->add_option("--fallback", indices.fallback)
      ->check(CLI::IsMember({"grid", "none"}));
  cmd_indices->add_option("--k", indices.k_override, "override segment count");
  cmd_indices->add_option("--resolution", indices.resolution,
                          "grid nodes per axis");
  cmd_indices->add_option("--degree", indices.degree,
                          "multiplier degree for the certification engine");
  cmd_indices->add_option("--out-dir", indices.out_dir);

  CheckArgs check;
  auto* cmd_check =
      app.add_subcommand("check", "check a recovery-time assignment");
  cmd_check->add_option("--model", check.model)->required();
  cmd_check->add_option("--sci", check.sci, "rate table csv")->required();
  cmd_check->add_option("--times", check.times, "recovery times")
      ->delimiter(',');
  cmd_check->add_option("--archs", check.archs, "architecture ids")
      ->delimiter(',');
  cmd_check->add_option("--order", check.order)
      ->check(CLI::IsMember({"sorted", "listed"}));
  cmd_check->add_option("--out", check.out, "verdict json");

  AssignArgs assign;
  auto* cmd_assign =
      app.add_subcommand("assign", "find the cost-optimal assignment");
  cmd_assign->add_option("--model", assign.model)->required();
  cmd_assign->add_option("--sci", assign.sci, "rate table csv")->required();
  cmd_assign->add_option("--order", assign.order)
      ->check(CLI::IsMember({"sorted", "listed"}));
  cmd_assign->add_option("--mode", assign.mode)
      ->check(CLI::IsMember({"bnb", "enumerate"}));
  cmd_assign->add_flag("--injective", assign.injective,
                       "assign each architecture at most once");
  cmd_assign->add_option("--catalog", assign.catalog,
                         "architecture catalog json overriding the model");
  cmd_assign->add_option("--out", assign.out);

  SimulateArgs simulate;
  auto* cmd_simulate =
      app.add_subcommand("simulate", "run one adversarial attack scenario");
  cmd_simulate->add_option("--model", simulate.model)->required();
  cmd_simulate->add_option("--assignment", simulate.assignment,
                           "assignment json from `assign`");
  cmd_simulate->add_option("--times", simulate.times, "raw recovery times")
      ->delimiter(',');
  cmd_simulate->add_option("--sci", simulate.sci,
                           "rate table for the certificate side");
  cmd_simulate->add_option("--order", simulate.order)
      ->check(CLI::IsMember({"sorted", "listed"}));
  cmd_simulate->add_option("--scenario", simulate.scenario)
      ->check(CLI::IsMember({"simultaneous", "sequential", "overlap", "custom"}));
  cmd_simulate->add_option("--overlap", simulate.overlap,
                           "overlap fraction for --scenario overlap");
  cmd_simulate->add_option("--scenario-file", simulate.scenario_file);
  cmd_simulate->add_option("--t0", simulate.t0, "attack onset");
  cmd_simulate->add_option("--step", simulate.step, "integration step");
  cmd_simulate->add_option("--out-dir", simulate.out_dir);

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "batch scenarios over overlaps and random orderings");
  cmd_sweep->add_option("--model", sweep.model)->required();
  cmd_sweep->add_option("--assignment", sweep.assignment);
  cmd_sweep->add_option("--times", sweep.times)->delimiter(',');
  cmd_sweep->add_option("--overlaps", sweep.overlaps, "overlap fractions")
      ->delimiter(',');
  cmd_sweep->add_option("--orderings", sweep.orderings,
                        "random orderings per overlap");
  cmd_sweep->add_option("--seed", sweep.seed);
  cmd_sweep->add_option("--t0", sweep.t0);
  cmd_sweep->add_option("--step", sweep.step);
  cmd_sweep->add_option("--out-dir", sweep.out_dir);

  int rc = kExitOk;
  cmd_init->callback([&] { rc = run_init(init); });
  cmd_indices->callback([&] { rc = run_indices(indices); });
  cmd_check->callback([&] { rc = run_check(check); });
  cmd_assign->callback([&] { rc = run_assign(assign); });
  cmd_simulate->callback([&] { rc = run_simulate(simulate); });
  cmd_sweep->callback([&] { rc = run_sweep(sweep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return rc;
}
