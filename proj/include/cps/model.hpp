#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cps/polynomial.hpp"

namespace cps {

// One control-affine subsystem: the states it owns, its input box, the rows
// of the drift and input maps for those states, and the nominal feedback
// policy that the criticality analysis measures deviations against.
//
// All polynomials live in the model-wide variable space: states first
// (0..n-1), then inputs grouped by subsystem. Drift, input map, safety
// function and policy must only mention state variables; the input
// variables exist so downstream code can form mixed state/input
// expressions without reindexing.
struct Subsystem {
  std::string name;
  std::vector<int> states;           // indices into the global state vector
  int input_count = 0;
  Box input_box{Eigen::VectorXd::Zero(0), Eigen::VectorXd::Zero(0)};
  std::vector<Polynomial> f;                // one row per owned state
  std::vector<std::vector<Polynomial>> g;   // states x inputs
  std::vector<Polynomial> policy;           // one entry per input
};

struct Diagnostic {
  std::string code;
  std::string message;
};

// A recovery mechanism abstracted to the two numbers the assignment search
// needs: how long a compromised subsystem stays compromised after the
// attack is detected, and what deploying the mechanism costs.
struct Architecture {
  std::string id;
  double recovery_time = 0.0;
  double cost = 0.0;
};

struct Model {
  std::string name;
  int n_states = 0;
  std::vector<Subsystem> subsystems;
  Polynomial h{1};
  double c = 0.0;        // safe-core offset: certified region is {h >= c}
  int K = 1;             // number of degradation segments between 0 and c
  double tau = 0.0;      // guaranteed gap between attack cycles
  double alpha = 1.0;    // linear class-K gain in the drift condition
  Box state_box{Eigen::VectorXd::Zero(0), Eigen::VectorXd::Zero(0)};
  Eigen::VectorXd x0;
  std::vector<Architecture> architectures;  // catalog for the assignment search

  int N() const { return static_cast<int>(subsystems.size()); }
  int total_inputs() const;
  int input_var_base(int subsystem) const;  // first input variable index
  int nvars() const { return n_states + total_inputs(); }
  double segment_width() const { return c / K; }

  // Semantic checks; structural impossibilities throw at load instead.
  std::vector<Diagnostic> validate() const;
};

nlohmann::json to_json(const Model& m);
Model from_json(const nlohmann::json& j);
Model load_model(const std::string& path);
void save_model(const Model& m, const std::string& path);

// N thermally coupled rooms in a ring with a shared band constraint on the
// mean temperature. Third room, when present, has a weaker heater.
Model build_room_model(int n_rooms);

// Right-hand side f(x) + g(x) u, concatenated over subsystems in order.
Eigen::VectorXd eval_dynamics(const Model& m, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u);

// Nominal policy stacked over subsystems.
Eigen::VectorXd eval_policy(const Model& m, const Eigen::VectorXd& x);

// Box center if it satisfies h >= c, otherwise the first point of a
// deterministic sample sequence that does.
Eigen::VectorXd default_initial_state(const Model& m);

}  // namespace cps
