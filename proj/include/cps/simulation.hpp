#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cps/assignment.hpp"
#include "cps/model.hpp"

namespace cps {

// One attack cycle: each subsystem is compromised at most once. A negative
// start means the subsystem is left alone; durations come from the assigned
// architecture's recovery time. The cycle ends once everyone has recovered.
struct AttackScenario {
  double t0 = 0.0;
  double tf = 0.0;
  std::vector<double> start;
  std::vector<double> duration;
};

struct TrajectoryEvent {
  double time = 0.0;
  int subsystem = 0;  // 0-based
  std::string kind;   // "attack" | "recovery"
};

struct Trajectory {
  double step = 0.0;
  std::vector<double> t;
  Eigen::MatrixXd x;  // samples x states
  Eigen::MatrixXd u;  // samples x total inputs, as applied
  std::vector<double> h;
  std::vector<int> phase;  // events passed by each sample
  std::vector<TrajectoryEvent> events;
  double min_h = 0.0;
  std::optional<double> return_time;  // first t at/after the last recovery
                                      // with h >= c; empty if never
  bool aborted = false;               // state left the finite range
};

// Control law of one subsystem during integration, called at every
// Runge-Kutta stage with the stage time and full state.
using ControlLaw =
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

std::vector<ControlLaw> nominal_laws(const Model& m);

// Classical fixed-step RK4. The horizon is snapped up to a whole number of
// steps; a non-finite state stops the run early with `aborted` set and all
// recorded samples finite.
Trajectory integrate(const Model& m, const std::vector<ControlLaw>& laws,
                     const Eigen::VectorXd& x0, double t0, double tf,
                     double step);

// Worst admissible input of subsystem i at state x: the input-dependent
// part of dh/dt is affine in u_i, so each coordinate sits at the box edge
// its coefficient selects (lower edge on a zero coefficient).
Eigen::VectorXd greedy_adversary_input(const Model& m, int i,
                                       const Eigen::VectorXd& x);

enum class ScenarioKind { simultaneous, sequential, overlap };

// Onset schedules: simultaneous starts everyone at t0; sequential starts
// each subsystem at the previous one's recovery; overlap(f) starts it a
// fraction f of the previous compromise early. fraction 0 is sequential,
// 1 is simultaneous.
AttackScenario make_scenario(const Model& m, const Assignment& a, double t0,
                             ScenarioKind kind, double fraction = 0.5);

// Adversary override for run_scenario; empty means greedy_adversary_input.
using Adversary =
    std::function<Eigen::VectorXd(const Model&, int, const Eigen::VectorXd&)>;

// Simulate from m.x0 over [0, tf + tau]: nominal policy outside each
// compromise window, adversary inside. Windows are snapped to the step
// grid (floor), so event times sit on the grid exactly.
Trajectory run_scenario(const Model& m, const AttackScenario& scenario,
                        double step = 1e-4, const Adversary& adversary = {});

// Monte-Carlo falsification of the nominal-policy premises: inside the
// safe core dh/dt may not decay faster than alpha * (h - c); in the
// approach band it must climb at least c / tau. A clean report is evidence,
// not proof.
struct AssumptionReport {
  int samples = 0;
  int core_checked = 0;  // draws with h >= c
  int band_checked = 0;  // draws with 0 <= h < c
  int cond1_violations = 0;
  int cond2_violations = 0;
  double worst_slack1 = 0.0;  // min of dh/dt + alpha * (h - c)
  double worst_slack2 = 0.0;  // min of dh/dt - c / tau
  double tau_bound = 0.0;     // slowest sampled climb time from h = 0 to c
  Eigen::VectorXd worst_point1, worst_point2;
};

AssumptionReport verify_assumption1(const Model& m, int samples,
                                    unsigned seed = 0x7275'6e31u);

// Columns: t, x_1..x_n, u_1..u_r, h, phase.
void write_trajectory_csv(const Trajectory& tr, const std::string& path);

// min_h, return_time, aborted, sample count and the event log.
nlohmann::json summary_json(const Trajectory& tr);

}  // namespace cps
