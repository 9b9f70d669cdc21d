#pragma once

// Inverted factors of safety, 0 = comfortable, 1 = at the limit.

#include <string>
#include <vector>

#include "psf/dynamics.hpp"

namespace psf {

struct HandoverWorld;

enum class MotorAggregation { Max, Min };

struct FosSample {
  long step = 0;
  double contact = 0.0;
  double motor = 0.0;
  double combined = 0.0;

  bool operator==(const FosSample&) const = default;
};

// Contacts carrying less normal force than this are ignored.
inline constexpr double kMinNormalForce = 1e-9;

// Normal-force weighted mean of |lambda_t| / (mu lambda_n) over contacts of
// the listed pairs. Zero while reward mode is 1 or 3, or without contacts.
double fos_contact(const std::vector<Contact>& contacts, int reward_mode, const std::vector<int>& grasp_pairs);

// Max (or min) of |effort| / limit. Throws EmptyEngagedSet on empty input.
double fos_motor(const std::vector<double>& efforts, const std::vector<double>& limits,
                 MotorAggregation aggregation = MotorAggregation::Max);
double fos_motor(const MultibodySystem& system, const SystemState& state, const std::vector<int>& engaged,
                 MotorAggregation aggregation = MotorAggregation::Max);

FosSample fos_combined(double contact, double motor, long step = 0);

// Both factors for a handover state; the motor factor is 0 when no arm
// touches the box.
FosSample handover_fos(const HandoverWorld& world, const SystemState& state, int reward_mode,
                       MotorAggregation aggregation = MotorAggregation::Max);

// Combined inverse FOS over a parameter grid, mass-major (index i * n_friction + j).
struct FosField {
  std::string event_id;
  int n_mass = 0;
  int n_friction = 0;
  std::vector<double> combined;
  std::vector<double> contact;
  std::vector<double> motor;
  // Grid points where the solver failed; their value is 1.
  std::vector<char> failed;

  std::size_t size() const { return combined.size(); }
};

// Sum of weight * value. Weights must match in size and sum to 1 within 1e-9.
double safety_score(const std::vector<double>& values, const std::vector<double>& weights);
double safety_score(const FosField& field, const std::vector<double>& weights);

// Strict: S < epsilon. Epsilon must lie in (0, 1].
bool is_safe(double score, double epsilon);

}  // namespace psf
