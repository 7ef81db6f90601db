#include "cps/safety.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cps {

DegradationProfile::DegradationProfile(double delta,
                                       std::vector<double> slopes_crossing_order,
                                       SlopeOrder order)
    : delta_(delta), slopes_(std::move(slopes_crossing_order)) {
  if (delta_ <= 0.0)
    throw std::invalid_argument("degradation: band width must be positive");
  if (slopes_.empty())
    throw std::invalid_argument("degradation: need at least one band");
  for (double s : slopes_)
    if (s > 0.0 || !std::isfinite(s))
      throw std::invalid_argument("degradation: rates must be finite and <= 0");
  if (order == SlopeOrder::sorted) std::sort(slopes_.begin(), slopes_.end());
  double t = 0.0;
  for (double s : slopes_) {
    if (s == 0.0) break;  // stuck: no further crossings
    t += delta_ / (-s);
    breakpoints_.push_back(t);
  }
}

double DegradationProfile::value(double t) const {
  if (t < 0.0) throw std::invalid_argument("degradation: negative time");
  double piece_start = 0.0;
  for (size_t m = 0; m < slopes_.size(); ++m) {
    if (slopes_[m] == 0.0) return -static_cast<double>(m) * delta_;
    double piece_end = breakpoints_[m];
    if (t <= piece_end)
      return -static_cast<double>(m) * delta_ + slopes_[m] * (t - piece_start);
    piece_start = piece_end;
  }
  return -kInf;
}

double DegradationProfile::time_to_drop(double drop) const {
  if (drop < 0.0) throw std::invalid_argument("degradation: negative drop");
  if (drop == 0.0) return 0.0;
  double piece_start = 0.0;
  for (size_t m = 0; m < slopes_.size(); ++m) {
    if (slopes_[m] == 0.0) return kInf;  // never reaches the level
    double at_piece_start = static_cast<double>(m) * delta_;
    double at_piece_end = at_piece_start + delta_;
    if (drop <= at_piece_end)
      return piece_start + (drop - at_piece_start) / (-slopes_[m]);
    piece_start = breakpoints_[m];
  }
  return breakpoints_.back();  // drop beyond the full depth: budget boundary
}

double DegradationProfile::exhaustion_time() const {
  if (breakpoints_.size() < slopes_.size()) return kInf;
  return breakpoints_.back();
}

DegradationProfile profile_from_segments(double delta,
                                         const std::vector<double>& rho_bottom_up,
                                         SlopeOrder order) {
  std::vector<double> crossing(rho_bottom_up.rbegin(), rho_bottom_up.rend());
  return DegradationProfile(delta, std::move(crossing), order);
}

SafetyVerdict check_uniform_bound(double c, const std::vector<double>& rho,
                                  const std::vector<double>& times) {
  if (rho.size() != times.size())
    throw std::invalid_argument("uniform bound: rate/time count mismatch");
  SafetyVerdict v;
  v.margin = c;
  for (size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] > 0.0)
      throw std::invalid_argument("uniform bound: rates must be <= 0");
    if (times[i] < 0.0)
      throw std::invalid_argument("uniform bound: negative recovery time");
    v.margin += rho[i] * times[i];
    double cap = max_recovery_time_uniform(c, rho[i]);
    if (times[i] > cap)
      v.notes.push_back("subsystem " + std::to_string(i + 1) +
                        " alone exceeds its recovery cap");
  }
  v.safe = v.margin >= 0.0;
  if (!v.safe && v.notes.empty())
    v.notes.push_back("aggregate decay exceeds the safety margin");
  return v;
}

SafetyVerdict check_segmented_bound(double c,
                                    const std::vector<DegradationProfile>& profiles,
                                    const std::vector<double>& times) {
  if (profiles.size() != times.size())
    throw std::invalid_argument("segmented bound: profile/time count mismatch");
  SafetyVerdict v;
  v.margin = c;
  for (size_t i = 0; i < profiles.size(); ++i) {
    if (times[i] < 0.0)
      throw std::invalid_argument("segmented bound: negative recovery time");
    double d = profiles[i].value(times[i]);
    if (d == -kInf)
      v.notes.push_back("subsystem " + std::to_string(i + 1) +
                        " alone exhausts the full band");
    v.margin += d;
  }
  v.safe = v.margin >= 0.0;
  if (!v.safe && v.notes.empty())
    v.notes.push_back("aggregate decay exceeds the safety margin");
  return v;
}

double max_recovery_time_uniform(double c, double rho) {
  if (rho > 0.0)
    throw std::invalid_argument("recovery cap: rate must be <= 0");
  if (rho == 0.0) return kInf;
  return c / (-rho);
}

double max_recovery_time(const DegradationProfile& profile) {
  return profile.exhaustion_time();
}

SafetyVerdict check_cycle_gaps(double c, double tau,
                               const std::vector<DegradationProfile>& profiles,
                               const std::vector<AttackCycle>& cycles) {
  SafetyVerdict v;
  v.safe = true;
  v.margin = kInf;
  double prev_end = -kInf;
  for (size_t k = 0; k < cycles.size(); ++k) {
    const AttackCycle& cy = cycles[k];
    std::string tag = "cycle " + std::to_string(k + 1);
    if (cy.events.empty()) {
      v.notes.push_back(tag + " has no events");
      v.safe = false;
      continue;
    }
    double begin = kInf, end = -kInf;
    std::vector<double> totals(profiles.size(), 0.0);
    bool shaped = true;
    for (const AttackEvent& e : cy.events) {
      if (e.subsystem < 0 || e.subsystem >= static_cast<int>(profiles.size())) {
        v.notes.push_back(tag + " names an unknown subsystem");
        v.safe = false;
        shaped = false;
        break;
      }
      if (e.duration < 0.0) {
        v.notes.push_back(tag + " has a negative duration");
        v.safe = false;
        shaped = false;
        break;
      }
      totals[e.subsystem] += e.duration;
      begin = std::min(begin, e.start);
      end = std::max(end, e.start + e.duration);
    }
    if (!shaped) continue;
    if (k > 0 && begin < prev_end + tau) {
      v.safe = false;
      v.notes.push_back(tag + " starts before the recovery gap has elapsed");
    }
    prev_end = end;
    SafetyVerdict inner = check_segmented_bound(c, profiles, totals);
    v.margin = std::min(v.margin, inner.margin);
    if (!inner.safe) {
      v.safe = false;
      v.notes.push_back(tag + " violates the aggregate margin");
      for (const auto& n : inner.notes) v.notes.push_back(tag + ": " + n);
    }
  }
  if (cycles.empty()) v.margin = c;
  return v;
}

}  // namespace cps
