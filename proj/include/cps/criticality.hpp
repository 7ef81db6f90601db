#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cps/model.hpp"
#include "cps/polynomial.hpp"

namespace cps {

enum class Engine { grid, sos };

// One certified per-band estimate. `rho` is a sound lower bound on the
// infimum of the deviation objective over (band in the state box) x (input
// box); `margin` is the slack that was subtracted to make it sound.
struct SegmentResult {
  double rho = 0.0;
  double margin = 0.0;
  std::string engine;   // "grid", "sos", "quadratic-exact", "grid(fallback)"
  std::string status;   // "ok", "ok-clamped", "EMPTY_SEGMENT",
                        // "NOT_CONVERGED", "CERTIFICATE_REJECTED"
  double walltime = 0.0;
};

struct SciTable {
  double delta = 0.0;                            // band width c/K
  std::vector<std::vector<SegmentResult>> rows;  // N x K, band 1 = [0, delta]

  int subsystems() const { return static_cast<int>(rows.size()); }
  int segments() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
  // Worst (most negative) certified rate of one subsystem across all bands.
  double worst_rate(int subsystem) const;
  // Bottom-up rate vector for one subsystem, ready for profile building.
  std::vector<double> rates(int subsystem) const;
};

struct GridSettings {
  int resolution = 41;  // nodes per sampled axis, endpoints included
};

struct SosSettings {
  int multiplier_degree = 2;
  int max_iterations = 20000;  // alternating-projection sweeps per level
  double feas_tol = 1e-7;      // coefficient-match residual acceptance
  double backoff_tol = 1e-3;   // largest sound correction accepted per level
  double bisect_tol = 1e-4;    // absolute gap on the certified level
  int sample_check = 4096;     // adversarial samples for the final cross-check
};

// Raw certificate for one band, in box-scaled coordinates: Gram blocks for
// the main expression, the two band multipliers, then a lower/upper pair per
// program variable. residual is the worst coefficient mismatch, min_eig the
// most negative eigenvalue across blocks; both are already paid for in the
// reported rho.
struct SosCertificate {
  double rho = 0.0;
  std::array<int, 4> multiplier_degrees{};  // band lower/upper, input, state
  std::vector<Eigen::MatrixXd> gram;
  double residual = 0.0;
  double min_eig = 0.0;
};

// How much faster the safety value can fall when subsystem i's input
// deviates from the nominal policy: (grad h restricted to i's states) dot
// g_i(x) (u_i - policy_i(x)). Polynomial in the model's joint variables.
Polynomial deviation_objective(const Model& m, int subsystem);

// State box and all input boxes stacked in variable order.
Box joint_box(const Model& m);

// Certified grid minimization over one band {lo <= h <= hi}. The band is
// inflated by the h-Lipschitz radius of a grid cell so every true band
// point has a sampled representative; the objective's Lipschitz radius is
// then subtracted from the sampled minimum.
SegmentResult sci_grid_band(const Model& m, int subsystem, double h_lo,
                            double h_hi, const GridSettings& settings);
SegmentResult sci_grid(const Model& m, int subsystem, int segment,
                       const GridSettings& settings);

// Gram-matrix certification of a candidate level via bisection; falls back
// on nothing, reports its own status. Tagged "quadratic-exact" when the
// whole certified expression is quadratic, where a plain Gram PSD check
// decides nonnegativity with no relaxation gap. Pass `certificate` to get
// the accepted Gram blocks back.
SegmentResult sci_sos(const Model& m, int subsystem, int segment,
                      const SosSettings& settings = {},
                      SosCertificate* certificate = nullptr);

// Full table; the sos engine falls back to the grid on segments it cannot
// certify, tagging them "grid(fallback)".
SciTable compute_sci_table(const Model& m, Engine engine,
                           const GridSettings& grid_settings,
                           const SosSettings& sos_settings);

void write_sci_csv(const SciTable& table, const std::string& path);
SciTable read_sci_csv(const std::string& path);

}  // namespace cps
