#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cps/criticality.hpp"
#include "test_support.hpp"

using cps::Model;
using cps::SegmentResult;
using cps::SosSettings;
using Eigen::VectorXd;

TEST_CASE("toy certificate lands on the analytic infimum") {
  Model m = toy_model();
  SegmentResult r = cps::sci_sos(m, 0, 1, SosSettings{});
  CHECK(r.engine == "sos");
  CHECK(r.status == "ok");
  CHECK(r.rho <= -2.0);
  CHECK(r.rho >= -2.2);
  CHECK(r.rho >= -2.01);  // bisection gap plus backoff stay small
  CHECK(r.margin >= 0.0);
  CHECK(r.margin < 0.01);
}

TEST_CASE("per band certificates respect the band geometry") {
  Model m = toy_model();
  m.K = 2;
  SegmentResult bottom = cps::sci_sos(m, 0, 1, SosSettings{});
  SegmentResult top = cps::sci_sos(m, 0, 2, SosSettings{});
  REQUIRE(bottom.status == "ok");
  REQUIRE(top.status == "ok");
  // exact infima: -2 on [0, 1/4], -sqrt(3) on [1/4, 1/2]
  CHECK(bottom.rho <= -2.0);
  CHECK(bottom.rho >= -2.05);
  CHECK(top.rho <= -std::sqrt(3.0) + 1e-9);
  CHECK(top.rho >= -std::sqrt(3.0) - 0.05);
  CHECK(top.rho > bottom.rho);
}

TEST_CASE("certified level never exceeds sampled band values") {
  Model m = toy_model();
  SegmentResult r = cps::sci_sos(m, 0, 1, SosSettings{});
  REQUIRE(r.status == "ok");
  cps::Box box = cps::joint_box(m);
  cps::Polynomial obj = cps::deviation_objective(m, 0);
  std::mt19937_64 rng(41);
  int found = 0;
  VectorXd z(2);
  while (found < 3000) {
    for (int v = 0; v < 2; ++v) {
      std::uniform_real_distribution<double> d(box.lower(v), box.upper(v));
      z(v) = d(rng);
    }
    double hv = m.h.eval(z);
    if (hv < 0.0 || hv > 0.5) continue;
    ++found;
    CHECK(r.rho <= obj.eval(z) + 1e-9);
  }
}

TEST_CASE("room band certificate is sound against sampling") {
  Model m = cps::build_room_model(3);
  SegmentResult r = cps::sci_sos(m, 0, 8, SosSettings{});
  REQUIRE(r.status == "ok");
  CHECK(r.rho < 0.0);

  cps::Box box = cps::joint_box(m);
  cps::Polynomial obj = cps::deviation_objective(m, 0);
  std::mt19937_64 rng(42);
  VectorXd z = box.center();
  int found = 0;
  double delta = m.segment_width();
  for (int s = 0; s < 200000 && found < 2000; ++s) {
    for (int v = 0; v < box.dimension(); ++v) {
      std::uniform_real_distribution<double> d(box.lower(v), box.upper(v));
      z(v) = d(rng);
    }
    double hv = m.h.eval(z);
    if (hv < 7.0 * delta || hv > 8.0 * delta) continue;
    ++found;
    CHECK(r.rho <= obj.eval(z) + 1e-9);
  }
  CHECK(found > 0);
}

TEST_CASE("degree zero multipliers cannot certify the cross term") {
  // without quadratic multipliers nothing supplies the u^2 mass that an
  // SOS form needs to dominate the x*u term, at any level
  Model m = toy_model();
  SosSettings st;
  st.multiplier_degree = 0;
  SegmentResult r = cps::sci_sos(m, 0, 1, st);
  CHECK(r.status == "NOT_CONVERGED");
}

TEST_CASE("table composition falls back to the grid per segment") {
  Model m = toy_model();
  SosSettings st;
  st.multiplier_degree = 0;  // force certification failure
  cps::GridSettings gs{200};
  cps::SciTable t = cps::compute_sci_table(m, cps::Engine::sos, gs, st);
  REQUIRE(t.subsystems() == 1);
  REQUIRE(t.segments() == 1);
  CHECK(t.delta == doctest::Approx(0.5));
  CHECK(t.rows[0][0].engine == "grid(fallback)");
  CHECK(t.rows[0][0].status == "ok");
  CHECK(t.rows[0][0].rho <= -2.0);

  cps::SciTable tg = cps::compute_sci_table(m, cps::Engine::grid, gs, SosSettings{});
  CHECK(tg.rows[0][0].engine == "grid");
}
