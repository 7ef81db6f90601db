#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "cps/model.hpp"

using cps::Box;
using cps::Model;
using cps::Polynomial;
using Eigen::VectorXd;

namespace {

bool has_code(const std::vector<cps::Diagnostic>& ds, const std::string& code) {
  for (const auto& d : ds)
    if (d.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("room model dynamics match hand computation") {
  Model m = cps::build_room_model(3);
  VectorXd x(3), u(3);
  x << 17.0, 18.0, 19.0;
  u << 0.3, 0.2, 0.1;
  VectorXd dx = cps::eval_dynamics(m, x, u);
  // per room: 10*(0.45*(neighbors - 2x) + 0.045*(-1 - x)) + 0.9*(50 - x)*u
  CHECK(dx(0) == doctest::Approx(5.4 + 29.7 * 0.3).epsilon(1e-12));
  CHECK(dx(1) == doctest::Approx(-8.55 + 28.8 * 0.2).epsilon(1e-12));
  CHECK(dx(2) == doctest::Approx(-22.5 + 27.9 * 0.1).epsilon(1e-12));
}

TEST_CASE("room model policy tracks the mean temperature") {
  Model m = cps::build_room_model(3);
  VectorXd x = VectorXd::Constant(3, 17.5);
  VectorXd u = cps::eval_policy(m, x);
  for (int i = 0; i < 3; ++i)
    CHECK(u(i) == doctest::Approx(0.285).epsilon(1e-12));
  x << 17.0, 18.0, 19.0;  // mean 18 -> no correction term
  u = cps::eval_policy(m, x);
  CHECK(u(1) == doctest::Approx(0.275).epsilon(1e-12));
}

TEST_CASE("room model structure") {
  Model m = cps::build_room_model(3);
  CHECK(m.N() == 3);
  CHECK(m.total_inputs() == 3);
  CHECK(m.nvars() == 6);
  CHECK(m.input_var_base(0) == 3);
  CHECK(m.input_var_base(2) == 5);
  CHECK(m.segment_width() == doctest::Approx(0.625));
  CHECK(m.subsystems[2].input_box.lower(0) == 0.0);
  CHECK(m.subsystems[2].input_box.upper(0) == 0.6);
  CHECK(m.subsystems[0].input_box.upper(0) == 2.0);

  VectorXd z = VectorXd::Zero(6);
  z.head(3) = m.x0;
  CHECK(m.h.eval(z) == doctest::Approx(6.25).epsilon(1e-12));

  Model m2 = cps::build_room_model(2);
  CHECK(m2.subsystems[1].input_box.lower(0) == -2.0);
}

TEST_CASE("well formed model validates clean") {
  Model m = cps::build_room_model(4);
  auto ds = m.validate();
  CHECK(ds.empty());
}

TEST_CASE("validation flags broken models") {
  SUBCASE("partition hole and double ownership") {
    Model m = cps::build_room_model(3);
    m.subsystems[1].states = {0};
    auto ds = m.validate();
    CHECK(has_code(ds, "PARTITION_INVALID"));
  }
  SUBCASE("policy count mismatch") {
    Model m = cps::build_room_model(3);
    m.subsystems[0].policy.clear();
    CHECK(has_code(m.validate(), "SHAPE_MISMATCH"));
  }
  SUBCASE("nonpositive cycle gap") {
    Model m = cps::build_room_model(3);
    m.tau = 0.0;
    CHECK(has_code(m.validate(), "TAU_NONPOSITIVE"));
  }
  SUBCASE("zero width input box") {
    Model m = cps::build_room_model(3);
    m.subsystems[1].input_box = Box(VectorXd::Constant(1, 0.5),
                                    VectorXd::Constant(1, 0.5));
    CHECK(has_code(m.validate(), "INPUT_BOX_DEGENERATE"));
  }
  SUBCASE("drift mentioning an input variable") {
    Model m = cps::build_room_model(3);
    m.subsystems[0].f[0] += Polynomial::variable(6, 4);
    CHECK(has_code(m.validate(), "VAR_OUT_OF_RANGE"));
  }
  SUBCASE("unreachable safety margin") {
    Model m = cps::build_room_model(3);
    m.c = 1e6;
    CHECK(has_code(m.validate(), "MARGIN_SET_EMPTY"));
  }
  SUBCASE("initial state outside the box") {
    Model m = cps::build_room_model(3);
    m.x0(0) = 99.0;
    CHECK(has_code(m.validate(), "X0_OUTSIDE_STATE_BOX"));
  }
  SUBCASE("policy escaping the input box") {
    Model m = cps::build_room_model(3);
    m.subsystems[2].policy[0] = Polynomial::constant(6, 5.0);
    CHECK(has_code(m.validate(), "POLICY_RANGE"));
  }
}

TEST_CASE("json round trip preserves the model") {
  Model m = cps::build_room_model(3);
  Model r = cps::from_json(cps::to_json(m));
  CHECK(r.name == m.name);
  CHECK(r.n_states == m.n_states);
  CHECK(r.h == m.h);
  CHECK(r.c == m.c);
  CHECK(r.K == m.K);
  CHECK(r.tau == m.tau);
  CHECK(r.alpha == m.alpha);
  CHECK(r.x0 == m.x0);
  CHECK(r.state_box.lower == m.state_box.lower);
  CHECK(r.state_box.upper == m.state_box.upper);
  REQUIRE(r.N() == m.N());
  for (int i = 0; i < m.N(); ++i) {
    CHECK(r.subsystems[i].states == m.subsystems[i].states);
    CHECK(r.subsystems[i].f[0] == m.subsystems[i].f[0]);
    CHECK(r.subsystems[i].g[0][0] == m.subsystems[i].g[0][0]);
    CHECK(r.subsystems[i].policy[0] == m.subsystems[i].policy[0]);
    CHECK(r.subsystems[i].input_box.lower == m.subsystems[i].input_box.lower);
  }
  CHECK(r.validate().empty());
}

TEST_CASE("architecture catalog round trips and validates") {
  Model m = cps::build_room_model(2);
  m.architectures = {{"A1", 0.0005, 50.0}, {"A2", 0.1, 1.0}};
  Model r = cps::from_json(cps::to_json(m));
  REQUIRE(r.architectures.size() == 2);
  CHECK(r.architectures[0].id == "A1");
  CHECK(r.architectures[0].recovery_time == 0.0005);
  CHECK(r.architectures[1].cost == 1.0);
  CHECK(r.validate().empty());

  auto has_code = [](const std::vector<cps::Diagnostic>& d, const char* code) {
    for (const auto& e : d)
      if (e.code == code) return true;
    return false;
  };
  Model bad = m;
  bad.architectures.push_back({"A1", -0.5, -2.0});
  auto diags = bad.validate();
  CHECK(has_code(diags, "ARCH_ID_DUPLICATE"));
  CHECK(has_code(diags, "ARCH_RECOVERY_NEGATIVE"));
  CHECK(has_code(diags, "ARCH_COST_NEGATIVE"));
}

TEST_CASE("file round trip") {
  Model m = cps::build_room_model(2);
  std::string path = "model_roundtrip_test.json";
  cps::save_model(m, path);
  Model r = cps::load_model(path);
  CHECK(r.h == m.h);
  CHECK(r.subsystems[1].f[0] == m.subsystems[1].f[0]);
  std::remove(path.c_str());
}

TEST_CASE("missing initial state is filled from the margin set") {
  Model m = cps::build_room_model(3);
  nlohmann::json j = cps::to_json(m);
  j.erase("x0");
  Model r = cps::from_json(j);
  REQUIRE(r.x0.size() == 3);
  VectorXd z = VectorXd::Zero(6);
  z.head(3) = r.x0;
  CHECK(r.h.eval(z) >= r.c);
  CHECK(r.x0 == m.state_box.center());  // center already qualifies
}

TEST_CASE("default initial state falls back to sampling") {
  Model m = cps::build_room_model(2);
  // shift the band so the center fails but part of the box qualifies
  int nv = m.nvars();
  Polynomial mean(nv);
  for (int i = 0; i < 2; ++i) mean += Polynomial::variable(nv, i) * 0.5;
  m.h = (mean - Polynomial::constant(nv, 19.0)) *
        (Polynomial::constant(nv, 27.0) - mean);
  m.c = 3.0;
  VectorXd x = cps::default_initial_state(m);
  VectorXd z = VectorXd::Zero(nv);
  z.head(2) = x;
  CHECK(m.h.eval(z) >= m.c);
  CHECK(m.state_box.contains(x));
  CHECK(x != m.state_box.center());
}

TEST_CASE("malformed json is reported with context") {
  nlohmann::json j = cps::to_json(cps::build_room_model(2));
  j.erase("h");
  CHECK_THROWS_WITH_AS(cps::from_json(j),
                       doctest::Contains("model: malformed json"),
                       std::runtime_error);
  nlohmann::json j2 = cps::to_json(cps::build_room_model(2));
  j2["subsystems"][0]["input_box"]["lower"] = {3.0};
  CHECK_THROWS_WITH_AS(cps::from_json(j2), doctest::Contains("input_box"),
                       std::runtime_error);
  CHECK_THROWS_AS(cps::load_model("does_not_exist.json"), std::runtime_error);
}
