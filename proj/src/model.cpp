#include "cps/model.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cps {

namespace {

Eigen::VectorXd to_vector(const nlohmann::json& j, const char* what) {
  if (!j.is_array())
    throw std::runtime_error(std::string("model: ") + what + " must be an array");
  Eigen::VectorXd v(j.size());
  for (size_t k = 0; k < j.size(); ++k) v(k) = j[k].get<double>();
  return v;
}

Box read_box(const nlohmann::json& j, const char* what) {
  Eigen::VectorXd lo = to_vector(j.at("lower"), what);
  Eigen::VectorXd hi = to_vector(j.at("upper"), what);
  try {
    return Box(std::move(lo), std::move(hi));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: bad ") + what + ": " + e.what());
  }
}

nlohmann::json box_json(const Box& b) {
  nlohmann::json j;
  j["lower"] = std::vector<double>(b.lower.data(), b.lower.data() + b.lower.size());
  j["upper"] = std::vector<double>(b.upper.data(), b.upper.data() + b.upper.size());
  return j;
}

bool uses_input_vars(const Polynomial& p, int n_states) {
  return p.max_variable() >= n_states;
}

}  // namespace

int Model::total_inputs() const {
  int r = 0;
  for (const auto& s : subsystems) r += s.input_count;
  return r;
}

int Model::input_var_base(int subsystem) const {
  int base = n_states;
  for (int i = 0; i < subsystem; ++i) base += subsystems[i].input_count;
  return base;
}

std::vector<Diagnostic> Model::validate() const {
  std::vector<Diagnostic> out;
  auto flag = [&out](const char* code, std::string msg) {
    out.push_back({code, std::move(msg)});
  };

  if (n_states <= 0) flag("SHAPE_MISMATCH", "model has no states");
  if (subsystems.empty()) flag("SHAPE_MISMATCH", "model has no subsystems");

  std::vector<int> owner(std::max(n_states, 0), -1);
  for (int i = 0; i < N(); ++i) {
    const Subsystem& s = subsystems[i];
    std::string tag = "subsystem " + std::to_string(i + 1);
    for (int v : s.states) {
      if (v < 0 || v >= n_states) {
        flag("PARTITION_INVALID", tag + " claims state x" + std::to_string(v));
      } else if (owner[v] != -1) {
        flag("PARTITION_INVALID", "state x" + std::to_string(v) + " owned twice");
      } else {
        owner[v] = i;
      }
    }
    if (s.input_count <= 0)
      flag("SHAPE_MISMATCH", tag + " has no inputs");
    if (s.input_box.dimension() != s.input_count)
      flag("SHAPE_MISMATCH", tag + " input box dimension != input count");
    for (int k = 0; k < s.input_box.dimension(); ++k)
      if (s.input_box.lower(k) == s.input_box.upper(k))
        flag("INPUT_BOX_DEGENERATE",
             tag + " input " + std::to_string(k + 1) + " has zero width");
    if (static_cast<int>(s.f.size()) != static_cast<int>(s.states.size()))
      flag("SHAPE_MISMATCH", tag + " drift rows != owned states");
    if (static_cast<int>(s.g.size()) != static_cast<int>(s.states.size()))
      flag("SHAPE_MISMATCH", tag + " input-map rows != owned states");
    for (const auto& row : s.g)
      if (static_cast<int>(row.size()) != s.input_count)
        flag("SHAPE_MISMATCH", tag + " input-map columns != input count");
    if (static_cast<int>(s.policy.size()) != s.input_count)
      flag("SHAPE_MISMATCH", tag + " policy entries != input count");

    auto check_state_only = [&](const Polynomial& p, const char* what) {
      if (p.max_variable() >= nvars())
        flag("VAR_OUT_OF_RANGE", tag + std::string(" ") + what +
                                     " uses an undeclared variable");
      else if (uses_input_vars(p, n_states))
        flag("VAR_OUT_OF_RANGE", tag + std::string(" ") + what +
                                     " must depend on states only");
    };
    for (const auto& p : s.f) check_state_only(p, "drift");
    for (const auto& row : s.g)
      for (const auto& p : row) check_state_only(p, "input map");
    for (const auto& p : s.policy) check_state_only(p, "policy");
  }
  for (int v = 0; v < n_states; ++v)
    if (v < static_cast<int>(owner.size()) && owner[v] == -1)
      flag("PARTITION_INVALID", "state x" + std::to_string(v) + " unowned");

  if (h.max_variable() >= n_states)
    flag("VAR_OUT_OF_RANGE", "safety function must depend on states only");
  if (state_box.dimension() != n_states)
    flag("SHAPE_MISMATCH", "state box dimension != state count");
  for (int k = 0; k < state_box.dimension(); ++k)
    if (state_box.lower(k) == state_box.upper(k))
      flag("STATE_BOX_DEGENERATE",
           "state x" + std::to_string(k) + " has zero width");
  if (c <= 0.0) flag("MARGIN_INVALID", "safe-core offset c must be positive");
  if (K < 1) flag("MARGIN_INVALID", "segment count K must be at least 1");
  if (tau <= 0.0) flag("TAU_NONPOSITIVE", "cycle gap tau must be positive");
  if (alpha <= 0.0) flag("ALPHA_NONPOSITIVE", "drift gain alpha must be positive");

  if (x0.size() != n_states)
    flag("SHAPE_MISMATCH", "initial state dimension != state count");
  else if (!state_box.contains(x0))
    flag("X0_OUTSIDE_STATE_BOX", "initial state leaves the state box");

  std::set<std::string> arch_ids;
  for (const auto& a : architectures) {
    if (a.id.empty())
      flag("ARCH_ID_EMPTY", "architecture with empty id");
    else if (!arch_ids.insert(a.id).second)
      flag("ARCH_ID_DUPLICATE", "architecture id " + a.id + " appears twice");
    if (a.recovery_time < 0.0)
      flag("ARCH_RECOVERY_NEGATIVE", "architecture " + a.id + " recovery time < 0");
    if (a.cost < 0.0)
      flag("ARCH_COST_NEGATIVE", "architecture " + a.id + " cost < 0");
  }

  // Sampled checks only make sense on structurally sound models.
  if (!out.empty()) return out;

  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  bool margin_hit = h.eval(state_box.center()) >= c;
  bool policy_ok = true;
  std::string policy_msg;
  for (int s = 0; s < 4096 && (!margin_hit || policy_ok); ++s) {
    Eigen::VectorXd x(n_states);
    for (int k = 0; k < n_states; ++k) {
      std::uniform_real_distribution<double> d(state_box.lower(k),
                                               state_box.upper(k));
      x(k) = d(rng);
    }
    if (h.eval(x) >= c) margin_hit = true;
    for (int i = 0; i < N() && policy_ok; ++i) {
      const Subsystem& sub = subsystems[i];
      for (int k = 0; k < sub.input_count; ++k) {
        double u = sub.policy[k].eval(x);
        if (u < sub.input_box.lower(k) - 1e-9 ||
            u > sub.input_box.upper(k) + 1e-9) {
          policy_ok = false;
          policy_msg = "subsystem " + std::to_string(i + 1) +
                       " policy leaves its input box at a sampled state";
          break;
        }
      }
    }
  }
  if (!margin_hit)
    flag("MARGIN_SET_EMPTY", "no sampled state satisfies h >= c");
  if (!policy_ok) flag("POLICY_RANGE", policy_msg);
  return out;
}

nlohmann::json to_json(const Model& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["states"] = m.n_states;
  j["h"] = m.h.to_string();
  j["c"] = m.c;
  j["K"] = m.K;
  j["tau"] = m.tau;
  j["alpha"] = m.alpha;
  j["state_box"] = box_json(m.state_box);
  j["x0"] = std::vector<double>(m.x0.data(), m.x0.data() + m.x0.size());
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : m.subsystems) {
    nlohmann::json js;
    js["name"] = s.name;
    js["states"] = s.states;
    js["inputs"] = s.input_count;
    js["input_box"] = box_json(s.input_box);
    nlohmann::json f = nlohmann::json::array();
    for (const auto& p : s.f) f.push_back(p.to_string());
    js["f"] = f;
    nlohmann::json g = nlohmann::json::array();
    for (const auto& row : s.g) {
      nlohmann::json jr = nlohmann::json::array();
      for (const auto& p : row) jr.push_back(p.to_string());
      g.push_back(jr);
    }
    js["g"] = g;
    nlohmann::json pol = nlohmann::json::array();
    for (const auto& p : s.policy) pol.push_back(p.to_string());
    js["policy"] = pol;
    subs.push_back(js);
  }
  j["subsystems"] = subs;
  if (!m.architectures.empty()) {
    nlohmann::json archs = nlohmann::json::array();
    for (const auto& a : m.architectures)
      archs.push_back({{"id", a.id},
                       {"recovery_time", a.recovery_time},
                       {"cost", a.cost}});
    j["architectures"] = archs;
  }
  return j;
}

Model from_json(const nlohmann::json& j) {
  Model m;
  try {
    m.name = j.value("name", "model");
    m.n_states = j.at("states").get<int>();
    if (m.n_states <= 0) throw std::runtime_error("model: states must be positive");

    int total_inputs = 0;
    for (const auto& js : j.at("subsystems"))
      total_inputs += js.at("inputs").get<int>();
    int nv = m.n_states + total_inputs;

    auto poly = [nv](const nlohmann::json& s, const char* what) {
      if (!s.is_string())
        throw std::runtime_error(std::string("model: ") + what +
                                 " must be a polynomial string");
      return Polynomial::parse(s.get<std::string>(), nv);
    };

    m.h = poly(j.at("h"), "h");
    m.c = j.at("c").get<double>();
    m.K = j.at("K").get<int>();
    m.tau = j.at("tau").get<double>();
    m.alpha = j.value("alpha", 1.0);
    m.state_box = read_box(j.at("state_box"), "state_box");

    for (const auto& js : j.at("subsystems")) {
      Subsystem s;
      s.name = js.value("name", "");
      s.states = js.at("states").get<std::vector<int>>();
      s.input_count = js.at("inputs").get<int>();
      s.input_box = read_box(js.at("input_box"), "input_box");
      for (const auto& e : js.at("f")) s.f.push_back(poly(e, "f"));
      for (const auto& row : js.at("g")) {
        std::vector<Polynomial> r;
        for (const auto& e : row) r.push_back(poly(e, "g"));
        s.g.push_back(std::move(r));
      }
      for (const auto& e : js.at("policy")) s.policy.push_back(poly(e, "policy"));
      m.subsystems.push_back(std::move(s));
    }

    if (j.contains("architectures"))
      for (const auto& ja : j.at("architectures")) {
        Architecture a;
        a.id = ja.at("id").get<std::string>();
        a.recovery_time = ja.at("recovery_time").get<double>();
        a.cost = ja.at("cost").get<double>();
        m.architectures.push_back(std::move(a));
      }

    if (j.contains("x0"))
      m.x0 = to_vector(j.at("x0"), "x0");
    else
      m.x0 = default_initial_state(m);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model: malformed json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
  return m;
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model: parse failure in " + path + ": " + e.what());
  }
  return from_json(j);
}

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model: cannot write " + path);
  out << to_json(m).dump(2) << "\n";
}

Model build_room_model(int n_rooms) {
  if (n_rooms < 2)
    throw std::invalid_argument("room model needs at least two rooms");
  const double wall = 0.45;    // inter-room conduction
  const double leak = 0.045;   // conduction to the exterior
  const double heat = 0.09;    // heater coupling
  const double delta = 0.1;    // thermal capacity
  const double t_ext = -1.0;
  const double t_heat = 50.0;

  Model m;
  m.name = "rooms" + std::to_string(n_rooms);
  m.n_states = n_rooms;
  int nv = 2 * n_rooms;  // one input per room

  Polynomial mean(nv);
  for (int i = 0; i < n_rooms; ++i)
    mean += Polynomial::variable(nv, i) * (1.0 / n_rooms);
  m.h = (mean - Polynomial::constant(nv, 15.0)) *
        (Polynomial::constant(nv, 20.0) - mean);
  m.c = 5.0;
  m.K = 8;
  m.tau = 3.0;
  m.alpha = 1.0;
  m.state_box = Box(Eigen::VectorXd::Constant(n_rooms, 10.0),
                    Eigen::VectorXd::Constant(n_rooms, 25.0));
  m.x0 = Eigen::VectorXd::Constant(n_rooms, 17.5);

  // Shared mean-tracking policy; stays well inside every heater range.
  Polynomial policy = Polynomial::constant(nv, 0.275) +
                      (Polynomial::constant(nv, 18.0) - mean) * 0.02;

  for (int i = 0; i < n_rooms; ++i) {
    Subsystem s;
    s.name = "room" + std::to_string(i + 1);
    s.states = {i};
    s.input_count = 1;
    bool weak = (n_rooms >= 3 && i == 2);
    s.input_box = weak ? Box(Eigen::VectorXd::Constant(1, 0.0),
                             Eigen::VectorXd::Constant(1, 0.6))
                       : Box(Eigen::VectorXd::Constant(1, -2.0),
                             Eigen::VectorXd::Constant(1, 2.0));
    Polynomial xi = Polynomial::variable(nv, i);
    Polynomial left = Polynomial::variable(nv, (i + n_rooms - 1) % n_rooms);
    Polynomial right = Polynomial::variable(nv, (i + 1) % n_rooms);
    Polynomial drift =
        ((left + right - xi * 2.0) * wall +
         (Polynomial::constant(nv, t_ext) - xi) * leak) * (1.0 / delta);
    Polynomial gain = (Polynomial::constant(nv, t_heat) - xi) * (heat / delta);
    s.f = {drift};
    s.g = {{gain}};
    s.policy = {policy};
    m.subsystems.push_back(std::move(s));
  }
  return m;
}

Eigen::VectorXd eval_dynamics(const Model& m, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m.nvars());
  z.head(m.n_states) = x;
  Eigen::VectorXd dx(m.n_states);
  int u_off = 0;
  for (const auto& s : m.subsystems) {
    for (size_t r = 0; r < s.states.size(); ++r) {
      double v = s.f[r].eval(z);
      for (int k = 0; k < s.input_count; ++k)
        v += s.g[r][k].eval(z) * u(u_off + k);
      dx(s.states[r]) = v;
    }
    u_off += s.input_count;
  }
  return dx;
}

Eigen::VectorXd eval_policy(const Model& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m.nvars());
  z.head(m.n_states) = x;
  Eigen::VectorXd u(m.total_inputs());
  int off = 0;
  for (const auto& s : m.subsystems)
    for (int k = 0; k < s.input_count; ++k) u(off++) = s.policy[k].eval(z);
  return u;
}

Eigen::VectorXd default_initial_state(const Model& m) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m.nvars());
  z.head(m.n_states) = m.state_box.center();
  if (m.h.eval(z) >= m.c) return m.state_box.center();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  for (int s = 0; s < 65536; ++s) {
    Eigen::VectorXd x(m.n_states);
    for (int k = 0; k < m.n_states; ++k) {
      std::uniform_real_distribution<double> d(m.state_box.lower(k),
                                               m.state_box.upper(k));
      x(k) = d(rng);
    }
    z.head(m.n_states) = x;
    if (m.h.eval(z) >= m.c) return x;
  }
  throw std::runtime_error("model: could not find a state with h >= c");
}

}  // namespace cps
