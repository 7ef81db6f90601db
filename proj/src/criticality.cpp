#include "cps/criticality.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cps {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<int> variables_of(const Polynomial& p) {
  std::set<int> vars;
  for (const auto& [mono, c] : p.terms())
    for (const auto& [var, exp] : mono.powers()) vars.insert(var);
  return vars;
}

// Walks a multi-index over the given axes; calls fn once per node with the
// point updated in place. With no axes, fn runs once on the base point.
template <typename Fn>
void for_each_node(Eigen::VectorXd& z, const std::vector<int>& axes,
                   const Box& box, int resolution, Fn&& fn) {
  std::vector<int> idx(axes.size(), 0);
  while (true) {
    for (size_t a = 0; a < axes.size(); ++a) {
      int v = axes[a];
      double w = (box.upper(v) - box.lower(v)) / (resolution - 1);
      z(v) = box.lower(v) + idx[a] * w;
    }
    fn();
    size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < resolution) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
}

constexpr double kMaxGridNodes = 2e8;

}  // namespace

Polynomial deviation_objective(const Model& m, int subsystem) {
  if (subsystem < 0 || subsystem >= m.N())
    throw std::invalid_argument("deviation objective: no such subsystem");
  const Subsystem& s = m.subsystems[subsystem];
  int base = m.input_var_base(subsystem);
  Polynomial obj(m.nvars());
  for (size_t r = 0; r < s.states.size(); ++r) {
    Polynomial dh = m.h.derivative(s.states[r]);
    if (dh.is_zero()) continue;
    for (int k = 0; k < s.input_count; ++k) {
      Polynomial dev = Polynomial::variable(m.nvars(), base + k) - s.policy[k];
      obj += dh * s.g[r][k] * dev;
    }
  }
  return obj;
}

Box joint_box(const Model& m) {
  Eigen::VectorXd lo(m.nvars()), hi(m.nvars());
  lo.head(m.n_states) = m.state_box.lower;
  hi.head(m.n_states) = m.state_box.upper;
  int off = m.n_states;
  for (const auto& s : m.subsystems) {
    lo.segment(off, s.input_count) = s.input_box.lower;
    hi.segment(off, s.input_count) = s.input_box.upper;
    off += s.input_count;
  }
  return Box(std::move(lo), std::move(hi));
}

SegmentResult sci_grid_band(const Model& m, int subsystem, double h_lo,
                            double h_hi, const GridSettings& settings) {
  auto t0 = Clock::now();
  int R = settings.resolution;
  if (R < 2)
    throw std::invalid_argument("grid engine: resolution must be at least 2");
  if (h_lo >= h_hi)
    throw std::invalid_argument("grid engine: empty band interval");

  Polynomial obj = deviation_objective(m, subsystem);
  Box box = joint_box(m);

  std::set<int> sampled = variables_of(m.h);
  for (int v : variables_of(obj)) sampled.insert(v);
  std::vector<int> state_axes, input_axes;
  for (int v : sampled)
    (v < m.n_states ? state_axes : input_axes).push_back(v);

  double total = std::pow(static_cast<double>(R),
                          static_cast<double>(sampled.size()));
  if (total > kMaxGridNodes)
    throw std::invalid_argument("grid engine: grid would exceed node limit");

  auto half_diag = [&](const std::vector<int>& axes) {
    double s = 0.0;
    for (int v : axes) {
      double w = (box.upper(v) - box.lower(v)) / (R - 1);
      s += w * w;
    }
    return 0.5 * std::sqrt(s);
  };
  double r_state = half_diag(state_axes);
  double r_joint;
  {
    std::vector<int> all(state_axes);
    all.insert(all.end(), input_axes.begin(), input_axes.end());
    r_joint = half_diag(all);
  }
  double inflate = gradient_sup_norm_bound(m.h, box) * r_state;
  double obj_slack = gradient_sup_norm_bound(obj, box) * r_joint;

  double raw_min = std::numeric_limits<double>::infinity();
  long long hits = 0;
  Eigen::VectorXd z = box.center();
  for_each_node(z, state_axes, box, R, [&] {
    double hv = m.h.eval(z);
    if (hv < h_lo - inflate || hv > h_hi + inflate) return;
    for_each_node(z, input_axes, box, R, [&] {
      double v = obj.eval(z);
      if (v < raw_min) raw_min = v;
      ++hits;
    });
  });

  SegmentResult res;
  res.engine = "grid";
  if (hits == 0) {
    res.status = "EMPTY_SEGMENT";
    res.rho = 0.0;
    res.margin = 0.0;
  } else {
    res.margin = obj_slack;
    res.rho = raw_min - obj_slack;
    res.status = "ok";
    if (res.rho > 0.0) {
      // a certified positive floor still cannot be banked as recovery
      res.rho = 0.0;
      res.status = "ok-clamped";
    }
  }
  res.walltime = seconds_since(t0);
  return res;
}

SegmentResult sci_grid(const Model& m, int subsystem, int segment,
                       const GridSettings& settings) {
  if (segment < 1 || segment > m.K)
    throw std::invalid_argument("grid engine: segment index out of range");
  double d = m.segment_width();
  return sci_grid_band(m, subsystem, (segment - 1) * d, segment * d, settings);
}

double SciTable::worst_rate(int subsystem) const {
  const auto& row = rows.at(subsystem);
  double w = 0.0;
  for (const auto& r : row) w = std::min(w, r.rho);
  return w;
}

std::vector<double> SciTable::rates(int subsystem) const {
  const auto& row = rows.at(subsystem);
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j) out[j] = row[j].rho;
  return out;
}

static const char* kSciHeader = "subsystem,segment,rho,engine,margin,walltime";

void write_sci_csv(const SciTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("sci csv: cannot write " + path);
  out << kSciHeader << "\n";
  for (size_t i = 0; i < table.rows.size(); ++i)
    for (size_t j = 0; j < table.rows[i].size(); ++j) {
      const SegmentResult& r = table.rows[i][j];
      out << (i + 1) << "," << (j + 1) << "," << format_double(r.rho) << ","
          << r.engine << "," << format_double(r.margin) << ","
          << format_double(r.walltime) << "\n";
    }
}

SciTable read_sci_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sci csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSciHeader)
    throw std::runtime_error("sci csv: unexpected header in " + path);

  struct Entry {
    int i, j;
    SegmentResult r;
  };
  std::vector<Entry> entries;
  int max_i = 0, max_j = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6)
      throw std::runtime_error("sci csv: line " + std::to_string(lineno) +
                               ": expected 6 fields");
    Entry e;
    try {
      e.i = std::stoi(f[0]);
      e.j = std::stoi(f[1]);
      e.r.rho = std::stod(f[2]);
      e.r.engine = f[3];
      e.r.margin = std::stod(f[4]);
      e.r.walltime = std::stod(f[5]);
    } catch (const std::exception&) {
      throw std::runtime_error("sci csv: line " + std::to_string(lineno) +
                               ": malformed number");
    }
    e.r.status = "ok";
    if (e.i < 1 || e.j < 1)
      throw std::runtime_error("sci csv: line " + std::to_string(lineno) +
                               ": indices are 1-based");
    max_i = std::max(max_i, e.i);
    max_j = std::max(max_j, e.j);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw std::runtime_error("sci csv: no data rows");
  SciTable table;
  table.rows.assign(max_i, std::vector<SegmentResult>(max_j));
  std::vector<std::vector<bool>> seen(max_i, std::vector<bool>(max_j, false));
  for (auto& e : entries) {
    if (seen[e.i - 1][e.j - 1])
      throw std::runtime_error("sci csv: duplicate entry for subsystem " +
                               std::to_string(e.i) + " segment " +
                               std::to_string(e.j));
    seen[e.i - 1][e.j - 1] = true;
    table.rows[e.i - 1][e.j - 1] = std::move(e.r);
  }
  for (int i = 0; i < max_i; ++i)
    for (int j = 0; j < max_j; ++j)
      if (!seen[i][j])
        throw std::runtime_error("sci csv: missing entry for subsystem " +
                                 std::to_string(i + 1) + " segment " +
                                 std::to_string(j + 1));
  return table;
}

}  // namespace cps
