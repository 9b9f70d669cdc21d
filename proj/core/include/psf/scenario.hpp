#pragma once

// Desk-scale planar handover: a giving arm grasps a box resting on a table,
// lifts it, a receiving arm grasps it from below, the giving arm lets go and
// the receiving arm lowers it.
//
// Each arm is a lift link hinged to the world and driven by a torque-limited
// velocity motor. Two pads hang from the link tip on world-x sliders with
// locked orientation (an idealised level carriage) and are driven by
// compliant linear motors. Pads collide with the box only.

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "psf/dynamics.hpp"
#include "psf/params.hpp"

namespace psf {

struct PhaseTimes {
  double giving_close = 0.25;
  double lift = 0.75;
  double receiving_close = 1.75;
  double giving_release = 2.25;
  double lower = 2.75;
  double hold = 3.75;
  // Duration of the lift and lower moves.
  double move_duration = 1.0;

  bool operator==(const PhaseTimes&) const = default;
};

struct HandoverConfig {
  double dt = 1.0 / 240.0;
  int horizon = 1200;

  Vec2 box_size{0.06, 0.06};
  Vec2 pad_size{0.01, 0.02};
  double link_length = 0.4;
  double link_mass = 0.3;
  double pad_mass = 0.05;
  double table_friction = 0.8;
  // Pad centre heights above the table for the giving and receiving arms.
  double giving_height = 0.045;
  double receiving_height = 0.035;

  double lift_max_torque = 4.4;  // N m
  double lift_damping = 400.0;   // N m s/rad, compliance of the lift drive
  double grip_max_force = 20.0;  // N
  double grip_damping = 200.0;   // N s/m, compliance of the grip drive
  double squeeze = 0.005;        // m of commanded interpenetration
  double grip_gain = 10.0;       // 1/s
  double grip_max_speed = 0.08;  // m/s
  double open_offset = 0.06;     // m, pad centre from tip when open
  double lift_gain = 20.0;       // 1/s

  double lift_height = 0.02;   // m, raised by the giving arm
  double lower_height = 0.015; // m, lowered by the receiving arm
  PhaseTimes phases{};

  bool operator==(const HandoverConfig&) const = default;
};

// Validates ranges; throws InvalidArgument naming the offending field.
void validate(const HandoverConfig& config);

struct ArmHandles {
  int link = 0;
  std::array<int, 2> pads{};   // body ids, -x side first
  int lift_motor = 0;          // index into the control vector
  std::array<int, 2> grip_motors{};
  std::array<int, 2> pad_pairs{};
  Vec2 pivot = Vec2::Zero();
  double rest_angle = 0.0;
  // +1 when a positive lift motor velocity raises the tip.
  double lift_sign = 1.0;
};

struct HandoverWorld {
  HandoverConfig config;
  WorldParams params;
  MultibodySystem system;
  int box = 0;
  int table_pair = 0;
  ArmHandles giving;
  ArmHandles receiving;
  SystemState initial;

  // Pad-box pairs of both arms.
  std::vector<int> grasp_pairs() const;
};

// Throws InvalidArgument if params lie outside the domain.
HandoverWorld build_handover(const WorldParams& params, const HandoverConfig& config = {},
                             const ParamDomain& domain = {});

// Static torque the lift motor needs to hold the arm horizontal with the
// box clamped between its pads.
double static_lift_torque(const HandoverConfig& config, double box_mass, double gravity = 9.81);

// Phase-scheduled waypoint controller. Returns one velocity target per motor.
Eigen::VectorXd scripted_policy(const HandoverWorld& world, const SystemState& state, int k);

// Reward modes:
//   0 box on table, untouched        1 on table, giving arm grasps
//   2 lifted by giving arm alone     3 held by both arms
//   4 held by receiving arm alone
// The result never falls below `previous`.
struct ContactPredicates {
  bool table = false;
  bool giving = false;
  bool receiving = false;
};

inline constexpr double kContactForceThreshold = 1e-3;  // N

ContactPredicates contact_predicates(const HandoverWorld& world, const SystemState& state);
int reward_mode(const ContactPredicates& p, int previous);
int reward(const HandoverWorld& world, const SystemState& state, int previous);

// Motors of every arm whose pads currently press on the box: its lift
// motor and both grip motors. Control-vector indices, ascending.
std::vector<int> engaged_motors(const HandoverWorld& world, const SystemState& state);

}  // namespace psf
