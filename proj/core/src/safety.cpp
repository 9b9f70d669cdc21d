#include "psf/safety.hpp"

#include <algorithm>
#include <cmath>

#include "psf/errors.hpp"
#include "psf/scenario.hpp"

namespace psf {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double fos_contact(const std::vector<Contact>& contacts, int reward_mode, const std::vector<int>& grasp_pairs) {
  if (reward_mode == 1 || reward_mode == 3) return 0.0;
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& c : contacts) {
    if (std::find(grasp_pairs.begin(), grasp_pairs.end(), c.pair) == grasp_pairs.end()) continue;
    if (!(c.lambda_n >= kMinNormalForce)) continue;
    // lambda_n * |lambda_t| / (mu lambda_n), with mu = 0 counting as sliding.
    const double ratio = c.mu > 0.0 ? std::abs(c.lambda_t) / (c.mu * c.lambda_n) : 1.0;
    weighted += c.lambda_n * ratio;
    total += c.lambda_n;
  }
  return total > 0.0 ? clamp01(weighted / total) : 0.0;
}

double fos_motor(const std::vector<double>& efforts, const std::vector<double>& limits, MotorAggregation aggregation) {
  if (efforts.size() != limits.size()) throw InvalidArgument("effort and limit lists differ in length");
  if (efforts.empty()) throw EmptyEngagedSet();
  double out = aggregation == MotorAggregation::Max ? 0.0 : 1.0;
  for (std::size_t i = 0; i < efforts.size(); ++i) {
    if (!(limits[i] > 0.0)) throw InvalidArgument("actuator limits must be positive");
    const double ratio = clamp01(std::abs(efforts[i]) / limits[i]);
    out = aggregation == MotorAggregation::Max ? std::max(out, ratio) : std::min(out, ratio);
  }
  return out;
}

double fos_motor(const MultibodySystem& system, const SystemState& state, const std::vector<int>& engaged,
                 MotorAggregation aggregation) {
  std::vector<double> efforts;
  std::vector<double> limits;
  for (int m : engaged) {
    efforts.push_back(motor_effort(system, state, m));
    limits.push_back(motor_limit(system, m));
  }
  return fos_motor(efforts, limits, aggregation);
}

FosSample fos_combined(double contact, double motor, long step) {
  FosSample s;
  s.step = step;
  s.contact = clamp01(contact);
  s.motor = clamp01(motor);
  s.combined = std::max(s.contact, s.motor);
  return s;
}

FosSample handover_fos(const HandoverWorld& world, const SystemState& state, int reward_mode,
                       MotorAggregation aggregation) {
  const double contact = fos_contact(state.contacts, reward_mode, world.grasp_pairs());
  const auto engaged = engaged_motors(world, state);
  const double motor = engaged.empty() ? 0.0 : fos_motor(world.system, state, engaged, aggregation);
  return fos_combined(contact, motor, state.step);
}

double safety_score(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw InvalidArgument("field and weights differ in size");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw InvalidArgument("weights do not sum to 1");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * values[i];
  return s;
}

double safety_score(const FosField& field, const std::vector<double>& weights) {
  if (static_cast<std::size_t>(field.n_mass) * static_cast<std::size_t>(field.n_friction) != field.size()) {
    throw InvalidArgument("field dimensions do not match its values");
  }
  return safety_score(field.combined, weights);
}

bool is_safe(double score, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in (0, 1]");
  return score < epsilon;
}

}  // namespace psf
