#include "psf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "psf/errors.hpp"

namespace psf {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw InvalidArgument("scenario." + field + " " + rule);
}

// Smooth 0 -> 1 over [start, start + duration].
double ramp(double t, double start, double duration) {
  if (t <= start) return 0.0;
  if (t >= start + duration) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * (t - start) / duration));
}

double ramp_rate(double t, double start, double duration) {
  if (t <= start || t >= start + duration) return 0.0;
  return 0.5 * std::numbers::pi / duration * std::sin(std::numbers::pi * (t - start) / duration);
}

ArmHandles add_arm(MultibodySystem& sys, const HandoverConfig& cfg, const std::string& name, const Vec2& pivot,
                   double rest_angle, double lift_sign, int box_collider) {
  ArmHandles arm;
  arm.pivot = pivot;
  arm.rest_angle = rest_angle;
  arm.lift_sign = lift_sign;
  const double L = cfg.link_length;
  const Vec2 dir(std::cos(rest_angle), std::sin(rest_angle));

  Body link;
  link.name = name + "_link";
  link.mass = cfg.link_mass;
  link.inertia = cfg.link_mass * L * L / 12.0;
  link.pose << pivot + 0.5 * L * dir, rest_angle;
  arm.link = sys.add_body(link);

  ConstraintDef hinge;
  hinge.kind = ConstraintKind::Hinge;
  hinge.name = name + "_hinge";
  hinge.body_a = kWorld;
  hinge.body_b = arm.link;
  hinge.anchor_a = pivot;
  hinge.anchor_b = Vec2(-0.5 * L, 0.0);
  sys.add_constraint(hinge);

  ConstraintDef lift;
  lift.kind = ConstraintKind::Motor;
  lift.name = name + "_lift";
  lift.body_a = kWorld;
  lift.body_b = arm.link;
  lift.motor_mode = MotorMode::Angular;
  lift.max_effort = cfg.lift_max_torque;
  // Finite stiffness makes the load split well defined while both arms hold the box.
  lift.regularization = 1.0 / (cfg.lift_damping * cfg.dt);
  sys.add_constraint(lift);
  arm.lift_motor = sys.motor_count() - 1;

  const Vec2 tip = pivot + L * dir;
  const Vec2 tip_local(0.5 * L, 0.0);
  const Vec2 pad_half = 0.5 * cfg.pad_size;
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    Body pad;
    pad.name = name + (i == 0 ? "_pad_neg" : "_pad_pos");
    pad.mass = cfg.pad_mass;
    pad.inertia = cfg.pad_mass * (cfg.pad_size.squaredNorm()) / 12.0;
    pad.pose << tip.x() + side * cfg.open_offset, tip.y(), 0.0;
    const int id = sys.add_body(pad);
    arm.pads[static_cast<std::size_t>(i)] = id;

    ConstraintDef slider;
    slider.kind = ConstraintKind::Prismatic;
    slider.name = pad.name + "_slider";
    slider.body_a = arm.link;
    slider.body_b = id;
    slider.anchor_a = tip_local;
    slider.axis = Vec2::UnitX();
    slider.axis_in_world = true;
    sys.add_constraint(slider);

    ConstraintDef grip;
    grip.kind = ConstraintKind::Motor;
    grip.name = pad.name + "_grip";
    grip.body_a = arm.link;
    grip.body_b = id;
    grip.anchor_a = tip_local;
    grip.axis = Vec2::UnitX();
    grip.axis_in_world = true;
    grip.motor_mode = MotorMode::Linear;
    grip.max_effort = cfg.grip_max_force;
    grip.regularization = 1.0 / (cfg.grip_damping * cfg.dt);
    sys.add_constraint(grip);
    arm.grip_motors[static_cast<std::size_t>(i)] = sys.motor_count() - 1;

    const int shape = sys.add_collider({pad.name, id, RectShape{Vec2::Zero(), pad_half}});
    arm.pad_pairs[static_cast<std::size_t>(i)] =
        sys.add_pair({pad.name + "-box", shape, box_collider, 0.5, true});
  }
  return arm;
}

double tip_x(const HandoverWorld& w, const ArmHandles& arm, const SystemState& s) {
  const Vec3& x = s.x[static_cast<std::size_t>(arm.link)];
  return x.x() + 0.5 * w.config.link_length * std::cos(x.z());
}

void arm_command(const HandoverWorld& w, const ArmHandles& arm, const SystemState& s, double dz, double dz_rate,
                 bool closed, Eigen::VectorXd& u) {
  const HandoverConfig& c = w.config;
  const double L = c.link_length;
  const double phi = std::asin(std::clamp(dz / L, -1.0, 1.0));
  const double phi_rate = dz_rate / (L * std::cos(phi));
  const double target = arm.rest_angle + arm.lift_sign * phi;
  const double angle = s.x[static_cast<std::size_t>(arm.link)].z();
  u[arm.lift_motor] = arm.lift_sign * phi_rate + c.lift_gain * (target - angle);

  const double tip = tip_x(w, arm, s);
  const double box_x = s.x[static_cast<std::size_t>(w.box)].x();
  const double reach = 0.5 * c.box_size.x() + 0.5 * c.pad_size.x() - c.squeeze;
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    const double goal_x = closed ? box_x + side * reach : tip + side * c.open_offset;
    const double pad_x = s.x[static_cast<std::size_t>(arm.pads[static_cast<std::size_t>(i)])].x();
    const double v = c.grip_gain * (goal_x - pad_x);
    u[arm.grip_motors[static_cast<std::size_t>(i)]] = std::clamp(v, -c.grip_max_speed, c.grip_max_speed);
  }
}

bool pressing(const SystemState& s, int pair) {
  for (const auto& c : s.contacts) {
    if (c.pair == pair && c.lambda_n > kContactForceThreshold) return true;
  }
  return false;
}

}  // namespace

void validate(const HandoverConfig& c) {
  require(c.dt > 0.0 && std::isfinite(c.dt), "dt", "must be positive");
  require(c.horizon > 0, "horizon", "must be positive");
  require(c.box_size.x() > 0.0 && c.box_size.y() > 0.0, "box_size", "must be positive");
  require(c.pad_size.x() > 0.0 && c.pad_size.y() > 0.0, "pad_size", "must be positive");
  require(c.link_length > 0.0, "link_length", "must be positive");
  require(c.link_mass > 0.0, "link_mass", "must be positive");
  require(c.pad_mass > 0.0, "pad_mass", "must be positive");
  require(c.table_friction >= 0.0, "table_friction", "must be non-negative");
  require(c.lift_max_torque > 0.0, "lift_max_torque", "must be positive");
  require(c.grip_max_force > 0.0, "grip_max_force", "must be positive");
  require(c.grip_damping > 0.0, "grip_damping", "must be positive");
  require(c.lift_damping > 0.0, "lift_damping", "must be positive");
  require(c.grip_gain > 0.0 && c.grip_max_speed > 0.0, "grip_gain", "and grip_max_speed must be positive");
  require(c.squeeze >= 0.0 && c.squeeze < 0.5 * c.box_size.x(), "squeeze", "must lie in [0, half the box width)");
  require(c.open_offset > 0.5 * (c.box_size.x() + c.pad_size.x()) + c.squeeze, "open_offset",
          "must clear the box");
  require(c.giving_height > 0.5 * c.pad_size.y() && c.giving_height < c.box_size.y(), "giving_height",
          "must put the pads against the box");
  require(std::abs(c.lift_height) < c.link_length && std::abs(c.lower_height) < c.link_length, "lift_height",
          "and lower_height must be shorter than the link");
  const PhaseTimes& p = c.phases;
  require(p.giving_close >= 0.0 && p.lift >= p.giving_close && p.receiving_close >= p.lift + p.move_duration &&
              p.giving_release >= p.receiving_close && p.lower >= p.giving_release && p.hold >= p.lower + p.move_duration,
          "phases", "must be ordered");
  require(p.move_duration > 0.0, "phases.move_duration", "must be positive");
}

std::vector<int> HandoverWorld::grasp_pairs() const {
  return {giving.pad_pairs[0], giving.pad_pairs[1], receiving.pad_pairs[0], receiving.pad_pairs[1]};
}

HandoverWorld build_handover(const WorldParams& params, const HandoverConfig& config, const ParamDomain& domain) {
  validate(config);
  if (!domain.contains(params)) throw InvalidArgument("world parameters lie outside the parameter domain");

  HandoverWorld w{config, params, MultibodySystem{}, 0, 0, {}, {}, {}};
  MultibodySystem& sys = w.system;

  Body box;
  box.name = "box";
  box.mass = params.mass;
  const double inertia_per_kg = config.box_size.squaredNorm() / 12.0;
  box.inertia = params.mass * inertia_per_kg;
  box.pose = Vec3(0.0, 0.5 * config.box_size.y(), 0.0);
  w.box = sys.add_body(box);
  sys.set_uncertain_mass_body(w.box, inertia_per_kg);

  const int table = sys.add_collider({"table", kWorld, HalfPlaneShape{Vec2::UnitY(), 0.0}});
  const int box_shape = sys.add_collider({"box", w.box, RectShape{Vec2::Zero(), 0.5 * config.box_size}});
  w.table_pair = sys.add_pair({"box-table", table, box_shape, config.table_friction, false});

  const double L = config.link_length;
  w.giving = add_arm(sys, config, "giving", Vec2(-L, config.giving_height), 0.0, 1.0, box_shape);
  w.receiving =
      add_arm(sys, config, "receiving", Vec2(L, config.receiving_height), std::numbers::pi, -1.0, box_shape);
  w.initial = sys.initial_state();
  return w;
}

double static_lift_torque(const HandoverConfig& c, double box_mass, double gravity) {
  return gravity * (c.link_mass * 0.5 * c.link_length + (2.0 * c.pad_mass + box_mass) * c.link_length);
}

Eigen::VectorXd scripted_policy(const HandoverWorld& w, const SystemState& s, int k) {
  const HandoverConfig& c = w.config;
  const PhaseTimes& p = c.phases;
  const double t = k * c.dt;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(w.system.motor_count());

  const double g_dz = c.lift_height * ramp(t, p.lift, p.move_duration);
  const double g_rate = c.lift_height * ramp_rate(t, p.lift, p.move_duration);
  const bool g_closed = t >= p.giving_close && t < p.giving_release;
  arm_command(w, w.giving, s, g_dz, g_rate, g_closed, u);

  const double r_dz = -c.lower_height * ramp(t, p.lower, p.move_duration);
  const double r_rate = -c.lower_height * ramp_rate(t, p.lower, p.move_duration);
  const bool r_closed = t >= p.receiving_close;
  arm_command(w, w.receiving, s, r_dz, r_rate, r_closed, u);
  return u;
}

ContactPredicates contact_predicates(const HandoverWorld& w, const SystemState& s) {
  ContactPredicates p;
  p.table = pressing(s, w.table_pair);
  p.giving = pressing(s, w.giving.pad_pairs[0]) || pressing(s, w.giving.pad_pairs[1]);
  p.receiving = pressing(s, w.receiving.pad_pairs[0]) || pressing(s, w.receiving.pad_pairs[1]);
  return p;
}

int reward_mode(const ContactPredicates& p, int previous) {
  int mode = 0;
  if (p.table) {
    mode = p.giving ? 1 : 0;
  } else if (p.giving) {
    mode = p.receiving ? 3 : 2;
  } else if (p.receiving) {
    mode = 4;
  }
  return std::max(mode, previous);
}

int reward(const HandoverWorld& w, const SystemState& s, int previous) {
  return reward_mode(contact_predicates(w, s), previous);
}

std::vector<int> engaged_motors(const HandoverWorld& w, const SystemState& s) {
  std::vector<int> out;
  for (const ArmHandles* arm : {&w.giving, &w.receiving}) {
    if (pressing(s, arm->pad_pairs[0]) || pressing(s, arm->pad_pairs[1])) {
      out.push_back(arm->lift_motor);
      out.push_back(arm->grip_motors[0]);
      out.push_back(arm->grip_motors[1]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace psf
