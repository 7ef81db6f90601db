#include "cps/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "cps/polynomial.hpp"

namespace cps {

namespace {

// Coefficients q_k(x) of the input-dependent part of dh/dt for subsystem i:
// sum over its states of dh/dx_s * g_{s,k}. State-only content, so they
// evaluate at state-sized points.
std::vector<Polynomial> input_coefficients(const Model& m, int i) {
  const Subsystem& s = m.subsystems.at(static_cast<std::size_t>(i));
  std::vector<Polynomial> q;
  q.reserve(static_cast<std::size_t>(s.input_count));
  for (int k = 0; k < s.input_count; ++k) {
    Polynomial acc(m.h.nvars());
    for (std::size_t r = 0; r < s.states.size(); ++r)
      acc += m.h.derivative(s.states[r]) * s.g[r][static_cast<std::size_t>(k)];
    q.push_back(std::move(acc));
  }
  return q;
}

// Box edge selected per coordinate; a zero coefficient falls to the lower
// edge so ties resolve deterministically.
Eigen::VectorXd edge_input(const Subsystem& s,
                           const std::vector<Polynomial>& coeff,
                           const Eigen::VectorXd& x) {
  Eigen::VectorXd u(s.input_count);
  for (int k = 0; k < s.input_count; ++k) {
    double q = coeff[static_cast<std::size_t>(k)].eval(x);
    u(k) = q < 0.0 ? s.input_box.upper(k) : s.input_box.lower(k);
  }
  return u;
}

}  // namespace

std::vector<ControlLaw> nominal_laws(const Model& m) {
  std::vector<ControlLaw> laws;
  laws.reserve(m.subsystems.size());
  for (const Subsystem& s : m.subsystems) {
    laws.push_back([&s](double, const Eigen::VectorXd& x) {
      Eigen::VectorXd u(s.input_count);
      for (int k = 0; k < s.input_count; ++k)
        u(k) = s.policy[static_cast<std::size_t>(k)].eval(x);
      return u;
    });
  }
  return laws;
}

Trajectory integrate(const Model& m, const std::vector<ControlLaw>& laws,
                     const Eigen::VectorXd& x0, double t0, double tf,
                     double step) {
  if (step <= 0.0) throw std::invalid_argument("integrate: step must be positive");
  if (tf < t0) throw std::invalid_argument("integrate: horizon ends before it starts");
  if (x0.size() != m.n_states)
    throw std::invalid_argument("integrate: initial state has the wrong dimension");
  if (static_cast<int>(laws.size()) != m.N())
    throw std::invalid_argument("integrate: one control law per subsystem required");

  const int r = m.total_inputs();
  auto control = [&](double t, const Eigen::VectorXd& x) {
    Eigen::VectorXd u(r);
    int off = 0;
    for (int i = 0; i < m.N(); ++i) {
      const int ni = m.subsystems[static_cast<std::size_t>(i)].input_count;
      u.segment(off, ni) = laws[static_cast<std::size_t>(i)](t, x);
      off += ni;
    }
    return u;
  };
  auto rhs = [&](double t, const Eigen::VectorXd& x) {
    return eval_dynamics(m, x, control(t, x));
  };

  long long n_steps = static_cast<long long>(
      std::ceil((tf - t0) / step - 1e-9));
  if (n_steps < 0) n_steps = 0;

  Trajectory tr;
  tr.step = step;
  tr.t.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.h.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.x.resize(n_steps + 1, m.n_states);
  tr.u.resize(n_steps + 1, r);
  tr.min_h = kInf;

  Eigen::VectorXd x = x0;
  auto record = [&](double t, double hv) {
    const auto k = static_cast<Eigen::Index>(tr.t.size());
    tr.t.push_back(t);
    tr.x.row(k) = x.transpose();
    tr.u.row(k) = control(t, x).transpose();
    tr.h.push_back(hv);
    tr.min_h = std::min(tr.min_h, hv);
  };
  record(t0, m.h.eval(x));

  for (long long k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * step;
    Eigen::VectorXd k1 = rhs(t, x);
    Eigen::VectorXd k2 = rhs(t + step / 2, x + (step / 2) * k1);
    Eigen::VectorXd k3 = rhs(t + step / 2, x + (step / 2) * k2);
    Eigen::VectorXd k4 = rhs(t + step, x + step * k3);
    x += (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    // h can overflow before the state itself does; both end the run
    const double hv = x.allFinite() ? m.h.eval(x) : kInf;
    if (!std::isfinite(hv)) {
      tr.aborted = true;
      break;
    }
    record(t0 + static_cast<double>(k + 1) * step, hv);
  }

  const auto kept = static_cast<Eigen::Index>(tr.t.size());
  tr.x.conservativeResize(kept, Eigen::NoChange);
  tr.u.conservativeResize(kept, Eigen::NoChange);
  tr.phase.assign(tr.t.size(), 0);
  return tr;
}

Eigen::VectorXd greedy_adversary_input(const Model& m, int i,
                                       const Eigen::VectorXd& x) {
  if (i < 0 || i >= m.N())
    throw std::invalid_argument("adversary: subsystem index out of range");
  if (x.size() != m.n_states)
    throw std::invalid_argument("adversary: state has the wrong dimension");
  return edge_input(m.subsystems[static_cast<std::size_t>(i)],
                    input_coefficients(m, i), x);
}

AttackScenario make_scenario(const Model& m, const Assignment& a, double t0,
                             ScenarioKind kind, double fraction) {
  const int n = m.N();
  if (!a.found || static_cast<int>(a.arch_of.size()) != n)
    throw std::invalid_argument("scenario: assignment does not cover the model");
  if (t0 < 0.0) throw std::invalid_argument("scenario: cycle start must be nonnegative");
  if (kind == ScenarioKind::overlap && (fraction < 0.0 || fraction > 1.0))
    throw std::invalid_argument("scenario: overlap fraction must lie in [0, 1]");

  std::vector<double> times(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int a_id = a.arch_of[static_cast<std::size_t>(i)];
    if (a_id < 0 || a_id >= static_cast<int>(m.architectures.size()))
      throw std::invalid_argument("scenario: assignment references a missing architecture");
    times[static_cast<std::size_t>(i)] =
        m.architectures[static_cast<std::size_t>(a_id)].recovery_time;
  }

  AttackScenario sc;
  sc.t0 = t0;
  sc.duration = times;
  sc.start.resize(static_cast<std::size_t>(n));
  if (kind == ScenarioKind::simultaneous) {
    std::fill(sc.start.begin(), sc.start.end(), t0);
  } else {
    // sequential is overlap with fraction 0: each onset waits out the whole
    // previous compromise.
    const double f = kind == ScenarioKind::sequential ? 0.0 : fraction;
    double onset = t0;
    for (int i = 0; i < n; ++i) {
      sc.start[static_cast<std::size_t>(i)] = onset;
      onset += (1.0 - f) * times[static_cast<std::size_t>(i)];
    }
  }
  sc.tf = t0;
  for (int i = 0; i < n; ++i)
    sc.tf = std::max(sc.tf, sc.start[static_cast<std::size_t>(i)] +
                                sc.duration[static_cast<std::size_t>(i)]);
  return sc;
}

Trajectory run_scenario(const Model& m, const AttackScenario& scenario,
                        double step, const Adversary& adversary) {
  const int n = m.N();
  if (static_cast<int>(scenario.start.size()) != n ||
      static_cast<int>(scenario.duration.size()) != n)
    throw std::invalid_argument("scenario: per-subsystem start and duration required");
  if (step <= 0.0) throw std::invalid_argument("scenario: step must be positive");
  if (scenario.tf < scenario.t0)
    throw std::invalid_argument("scenario: cycle ends before it starts");

  for (int i = 0; i < n; ++i) {
    const double s = scenario.start[static_cast<std::size_t>(i)];
    const double d = scenario.duration[static_cast<std::size_t>(i)];
    if (s < 0.0) continue;  // left alone
    if (d < 0.0) throw std::invalid_argument("scenario: negative compromise duration");
    if (s < scenario.t0 - 1e-12)
      throw std::invalid_argument("scenario: onset before the cycle start");
    if (s + d > scenario.tf + 1e-9)
      throw std::invalid_argument("scenario: recovery past the cycle end");
  }

  // Snap windows to the integration grid so events land on samples.
  auto snap = [step](double v) {
    return std::floor(v / step + 1e-9) * step;
  };
  std::vector<double> a(static_cast<std::size_t>(n), -1.0);
  std::vector<double> e(static_cast<std::size_t>(n), -1.0);
  std::vector<TrajectoryEvent> events;
  for (int i = 0; i < n; ++i) {
    if (scenario.start[static_cast<std::size_t>(i)] < 0.0) continue;
    a[static_cast<std::size_t>(i)] = snap(scenario.start[static_cast<std::size_t>(i)]);
    e[static_cast<std::size_t>(i)] = snap(scenario.start[static_cast<std::size_t>(i)] +
                                          scenario.duration[static_cast<std::size_t>(i)]);
    events.push_back({a[static_cast<std::size_t>(i)], i, "attack"});
    events.push_back({e[static_cast<std::size_t>(i)], i, "recovery"});
  }

  std::vector<std::vector<Polynomial>> coeff;
  coeff.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) coeff.push_back(input_coefficients(m, i));
  Adversary adv = adversary;
  if (!adv)
    adv = [&coeff](const Model& mm, int i, const Eigen::VectorXd& x) {
      return edge_input(mm.subsystems[static_cast<std::size_t>(i)],
                        coeff[static_cast<std::size_t>(i)], x);
    };

  std::vector<ControlLaw> laws;
  laws.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Subsystem& s = m.subsystems[static_cast<std::size_t>(i)];
    const double ai = a[static_cast<std::size_t>(i)];
    const double ei = e[static_cast<std::size_t>(i)];
    laws.push_back([&m, &s, &adv, ai, ei, i](double t, const Eigen::VectorXd& x) {
      if (ai >= 0.0 && t >= ai - 1e-12 && t < ei - 1e-12) return adv(m, i, x);
      Eigen::VectorXd u(s.input_count);
      for (int k = 0; k < s.input_count; ++k)
        u(k) = s.policy[static_cast<std::size_t>(k)].eval(x);
      return u;
    });
  }

  Trajectory tr = integrate(m, laws, m.x0, 0.0, scenario.tf + m.tau, step);

  std::sort(events.begin(), events.end(),
            [](const TrajectoryEvent& lhs, const TrajectoryEvent& rhs) {
              if (lhs.time != rhs.time) return lhs.time < rhs.time;
              if (lhs.kind != rhs.kind) return lhs.kind < rhs.kind;  // attack first
              return lhs.subsystem < rhs.subsystem;
            });
  tr.events = events;

  std::size_t passed = 0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    while (passed < events.size() && events[passed].time <= tr.t[k] + 1e-12)
      ++passed;
    tr.phase[k] = static_cast<int>(passed);
  }

  double last_recovery = 0.0;
  for (int i = 0; i < n; ++i)
    if (a[static_cast<std::size_t>(i)] >= 0.0)
      last_recovery = std::max(last_recovery, e[static_cast<std::size_t>(i)]);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    if (tr.t[k] < last_recovery - 1e-12) continue;
    if (tr.h[k] >= m.c) {
      tr.return_time = tr.t[k];
      break;
    }
  }
  return tr;
}

AssumptionReport verify_assumption1(const Model& m, int samples,
                                    unsigned seed) {
  if (samples < 1) throw std::invalid_argument("assumption check: samples must be positive");

  AssumptionReport rep;
  rep.samples = samples;
  rep.worst_slack1 = kInf;
  rep.worst_slack2 = kInf;

  std::vector<Polynomial> dh;
  dh.reserve(static_cast<std::size_t>(m.n_states));
  for (int k = 0; k < m.n_states; ++k) dh.push_back(m.h.derivative(k));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x(m.n_states);
  for (int s = 0; s < samples; ++s) {
    for (int k = 0; k < m.n_states; ++k)
      x(k) = m.state_box.lower(k) +
             unit(rng) * (m.state_box.upper(k) - m.state_box.lower(k));
    const double hv = m.h.eval(x);
    if (hv < 0.0) continue;  // outside the safety set

    Eigen::VectorXd xdot = eval_dynamics(m, x, eval_policy(m, x));
    double hdot = 0.0;
    for (int k = 0; k < m.n_states; ++k)
      hdot += dh[static_cast<std::size_t>(k)].eval(x) * xdot(k);

    if (hv >= m.c) {
      ++rep.core_checked;
      const double slack = hdot + m.alpha * (hv - m.c);
      if (slack < rep.worst_slack1) {
        rep.worst_slack1 = slack;
        rep.worst_point1 = x;
      }
      if (slack < 0.0) ++rep.cond1_violations;
    } else {
      ++rep.band_checked;
      const double slack = hdot - m.c / m.tau;
      if (slack < rep.worst_slack2) {
        rep.worst_slack2 = slack;
        rep.worst_point2 = x;
      }
      if (slack < 0.0) ++rep.cond2_violations;
    }
  }

  // Slowest sampled climb rate in the band gives the recovery-time bound.
  const double min_hdot = rep.worst_slack2 + m.c / m.tau;
  rep.tau_bound = min_hdot > 0.0 ? m.c / min_hdot : kInf;
  return rep;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trajectory: cannot write " + path);
  out << "t";
  for (Eigen::Index k = 0; k < tr.x.cols(); ++k) out << ",x_" << (k + 1);
  for (Eigen::Index k = 0; k < tr.u.cols(); ++k) out << ",u_" << (k + 1);
  out << ",h,phase\n";
  for (std::size_t row = 0; row < tr.t.size(); ++row) {
    out << format_double(tr.t[row]);
    const auto r = static_cast<Eigen::Index>(row);
    for (Eigen::Index k = 0; k < tr.x.cols(); ++k)
      out << "," << format_double(tr.x(r, k));
    for (Eigen::Index k = 0; k < tr.u.cols(); ++k)
      out << "," << format_double(tr.u(r, k));
    out << "," << format_double(tr.h[row]) << "," << tr.phase[row] << "\n";
  }
}

nlohmann::json summary_json(const Trajectory& tr) {
  nlohmann::json j;
  j["samples"] = tr.t.size();
  j["step"] = tr.step;
  j["min_h"] = tr.min_h;
  j["aborted"] = tr.aborted;
  if (tr.return_time)
    j["return_time"] = *tr.return_time;
  else
    j["return_time"] = nullptr;
  nlohmann::json ev = nlohmann::json::array();
  for (const TrajectoryEvent& e : tr.events)
    ev.push_back({{"time", e.time},
                  {"subsystem", e.subsystem + 1},
                  {"kind", e.kind}});
  j["events"] = ev;
  return j;
}

}  // namespace cps
