#pragma once

#include <limits>
#include <string>
#include <vector>

namespace cps {

enum class SlopeOrder {
  sorted,  // worst rates first: sound for any order the bands are crossed
  listed,  // use the given crossing order as-is
};

// Worst-case decay of the safety value while one subsystem is under attack.
// The walk starts at the safe-core boundary and crosses bands of width
// `delta`, moving at the band's rate. Rates are nonpositive; a zero rate
// means the attacker cannot push the value any lower from that band.
//
// value(t) is exact on each linear piece, equals -m*delta at the m-th
// crossing, and is -infinity strictly past the final crossing (the value
// would leave the certified region entirely).
class DegradationProfile {
 public:
  DegradationProfile(double delta, std::vector<double> slopes_crossing_order,
                     SlopeOrder order);

  double value(double t) const;
  // Largest finite t with value(t) >= -drop (conservative entry time when
  // the walk plateaus at exactly that level); +infinity when the walk
  // never falls below -drop.
  double time_to_drop(double drop) const;
  // Time of the final crossing; +infinity if a zero rate blocks the walk.
  double exhaustion_time() const;

  double delta() const { return delta_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

 private:
  double delta_;
  std::vector<double> slopes_;       // walk order after ordering policy
  std::vector<double> breakpoints_;  // cumulative crossing times (finite ones)
};

// Build a profile from per-band rates stored bottom-up (entry j-1 is the
// band [(j-1)*delta, j*delta]). The walk crosses top band first.
DegradationProfile profile_from_segments(double delta,
                                         const std::vector<double>& rho_bottom_up,
                                         SlopeOrder order);

struct SafetyVerdict {
  bool safe = false;
  double margin = 0.0;  // aggregate slack; negative or -inf when unsafe
  std::vector<std::string> notes;
};

// Single-rate bound: c + sum_i rho_i * t_i >= 0 with rho_i the worst rate
// of subsystem i anywhere in the band.
SafetyVerdict check_uniform_bound(double c, const std::vector<double>& rho,
                                  const std::vector<double>& times);

// Banded bound: c + sum_i D_i(t_i) >= 0. Subsystems attacked for longer
// than their own budget make the sum -infinity.
SafetyVerdict check_segmented_bound(double c,
                                    const std::vector<DegradationProfile>& profiles,
                                    const std::vector<double>& times);

// Largest single-subsystem recovery time that can ever be certified.
double max_recovery_time_uniform(double c, double rho);
double max_recovery_time(const DegradationProfile& profile);

struct AttackEvent {
  int subsystem = 0;  // 0-based
  double start = 0.0;
  double duration = 0.0;
};

struct AttackCycle {
  std::vector<AttackEvent> events;
};

// Repeated attack batches. Each cycle must satisfy the banded bound with
// per-subsystem total durations; consecutive cycles must be separated by at
// least tau so the drift condition can restore the safe core in between.
SafetyVerdict check_cycle_gaps(double c, double tau,
                               const std::vector<DegradationProfile>& profiles,
                               const std::vector<AttackCycle>& cycles);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace cps
