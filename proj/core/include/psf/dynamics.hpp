#pragma once

// Planar descriptor-form multibody dynamics. Bodies carry three coordinates
// (x, z, angle) with the angle measured counter-clockwise in the x-z plane.
// Joints, motors and contacts become rows of the saddle system
//
//   [ M  -J^T ] [ v+ ]   [ M v + dt f ]   [ w_l - w_u ]
//   [ J   S   ] [ L  ] - [ r          ] = [           ]
//
// solved as a mixed LCP in impulse units L; the state stores L / dt so that
// joint and contact multipliers read as forces and torques.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "psf/lcp.hpp"
#include "psf/params.hpp"

namespace psf {

using Vec2 = Eigen::Vector2d;
// (x, z, angle) for poses, (vx, vz, omega) for velocities, (fx, fz, torque) for loads.
using Vec3 = Eigen::Vector3d;

inline constexpr int kWorld = -1;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }
inline Vec2 rotate(double angle, const Vec2& a) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * a.x() - s * a.y(), s * a.x() + c * a.y()};
}

struct Body {
  std::string name;
  double mass = 1.0;
  double inertia = 1.0;
  Vec3 pose = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  // Constant applied load in addition to gravity.
  Vec3 external_force = Vec3::Zero();
};

enum class ConstraintKind { Hinge, Prismatic, Motor, ContactNormal, ContactTangent, Lock };

enum class MotorMode { Angular, Linear };

// A joint or motor between body_a (possibly kWorld) and body_b.
//   Hinge:     anchor points coincide (2 rows).
//   Prismatic: anchor_b stays on the line through anchor_a along `axis`, and
//              the orientation of b is fixed relative to the axis frame (2 rows).
//   Lock:      relative angle held at `offset` (1 row).
//   Motor:     relative angular velocity, or relative velocity along `axis`,
//              driven to the commanded target with |effort| <= max_effort (1 row).
struct ConstraintDef {
  ConstraintKind kind = ConstraintKind::Hinge;
  std::string name;
  int body_a = kWorld;
  int body_b = 0;
  Vec2 anchor_a = Vec2::Zero();
  Vec2 anchor_b = Vec2::Zero();
  Vec2 axis = Vec2::UnitX();
  bool axis_in_world = false;
  double offset = 0.0;
  MotorMode motor_mode = MotorMode::Angular;
  double max_effort = kInf;
  // Sigma diagonal entry; negative means "use the system default".
  double regularization = -1.0;
  // Baumgarte factor; negative means "use the system default".
  double stabilization = -1.0;
};

struct RectShape {
  Vec2 center = Vec2::Zero();  // in the body frame
  Vec2 half_extents{0.5, 0.5};
};

// Solid half-space {p : normal . p <= offset}, fixed in the world.
struct HalfPlaneShape {
  Vec2 normal = Vec2::UnitY();
  double offset = 0.0;
};

struct Collider {
  std::string name;
  int body = kWorld;
  std::variant<RectShape, HalfPlaneShape> shape;
};

struct CollisionPair {
  std::string name;
  int collider_a = 0;
  int collider_b = 0;
  double mu = 0.5;
  // Friction taken from WorldParams::friction instead of `mu`.
  bool uncertain_friction = false;
};

struct Contact {
  int pair = 0;
  int feature = 0;
  int body_a = kWorld;
  int body_b = kWorld;
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitY();  // from a towards b
  double gap = 0.0;             // negative when penetrating
  double mu = 0.0;
  double lambda_n = 0.0;  // N, >= 0 compressive
  double lambda_t = 0.0;  // N, along perp(normal), acting on b
};

struct SystemState {
  long step = 0;
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  // One entry per joint/motor row in definition order, force/torque units.
  Eigen::VectorXd joint_lambda;
  // Contacts used by the transition into this state, with their multipliers.
  std::vector<Contact> contacts;
  double solver_residual = 0.0;
};

enum class SolverKind { Direct, Pgs };

struct SystemConfig {
  Vec2 gravity{0.0, -9.81};
  double contact_margin = 5e-4;
  double compliance = 1e-8;
  double stabilization = 0.2;
  SolverKind solver = SolverKind::Direct;
  PgsOptions pgs{};
  Eigen::Index direct_cap = 256;
};

class MultibodySystem {
 public:
  explicit MultibodySystem(SystemConfig config = {}) : config_(std::move(config)) {}

  int add_body(Body body);
  int add_constraint(ConstraintDef def);
  int add_collider(Collider collider);
  int add_pair(CollisionPair pair);

  // The body whose mass comes from WorldParams::mass; its inertia is
  // mass * inertia_per_kg.
  void set_uncertain_mass_body(int body, double inertia_per_kg);
  void set_external_force(int body, const Vec3& load);

  const SystemConfig& config() const { return config_; }
  SystemConfig& config() { return config_; }
  const std::vector<Body>& bodies() const { return bodies_; }
  const std::vector<ConstraintDef>& constraints() const { return constraints_; }
  const std::vector<Collider>& colliders() const { return colliders_; }
  const std::vector<CollisionPair>& pairs() const { return pairs_; }
  int uncertain_mass_body() const { return uncertain_body_; }

  // Motors in definition order; the control vector is indexed the same way.
  const std::vector<int>& motors() const { return motors_; }
  int motor_count() const { return static_cast<int>(motors_.size()); }

  // First row of each constraint within joint_lambda, and the row count.
  Eigen::Index row_offset(int constraint) const { return row_offset_[static_cast<std::size_t>(constraint)]; }
  Eigen::Index joint_rows() const { return joint_rows_; }
  static int rows_of(ConstraintKind kind);

  double body_mass(int body, const WorldParams& params) const;
  double body_inertia(int body, const WorldParams& params) const;
  double pair_friction(int pair, const WorldParams& params) const;

  SystemState initial_state() const;

 private:
  SystemConfig config_;
  std::vector<Body> bodies_;
  std::vector<ConstraintDef> constraints_;
  std::vector<Collider> colliders_;
  std::vector<CollisionPair> pairs_;
  std::vector<int> motors_;
  std::vector<Eigen::Index> row_offset_;
  Eigen::Index joint_rows_ = 0;
  int uncertain_body_ = -1;
  double inertia_per_kg_ = 0.0;
};

// Contacts between every registered pair at the poses in `state`, with gap
// no larger than the contact margin. Rectangle-rectangle pairs yield up to
// two points (face clipping); rectangle-half-plane pairs one per corner.
std::vector<Contact> detect_contacts(const MultibodySystem& system, const SystemState& state,
                                     const WorldParams& params);

struct Assembly {
  MLCPProblem problem;
  std::vector<Contact> contacts;
  Eigen::Index body_dofs = 0;
  Eigen::Index joint_rows = 0;
  // Warm start from the previous multipliers, matched by contact feature.
  Eigen::VectorXd warm_start;
};

// `control` holds one velocity target per motor (rad/s or m/s).
Assembly assemble(const MultibodySystem& system, const SystemState& state, const Eigen::VectorXd& control,
                  const WorldParams& params, double dt);

SystemState step(const MultibodySystem& system, const SystemState& state, const Eigen::VectorXd& control,
                 const WorldParams& params, double dt);

// Motor coordinate (relative angle, or displacement along the axis) and effort.
double motor_position(const MultibodySystem& system, const SystemState& state, int motor);
double motor_effort(const MultibodySystem& system, const SystemState& state, int motor);
double motor_limit(const MultibodySystem& system, int motor);

// Kinetic plus gravitational potential energy.
double mechanical_energy(const MultibodySystem& system, const SystemState& state, const WorldParams& params);

}  // namespace psf
