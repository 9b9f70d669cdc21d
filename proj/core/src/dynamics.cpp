#include "psf/dynamics.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace psf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Vec3 pose_of(const SystemState& state, int body) {
  return body == kWorld ? Vec3::Zero() : state.x[static_cast<std::size_t>(body)];
}

Vec2 anchor_world(const SystemState& state, int body, const Vec2& local) {
  if (body == kWorld) return local;
  const Vec3& x = state.x[static_cast<std::size_t>(body)];
  return x.head<2>() + rotate(x.z(), local);
}

// Adds sign * (dir, (p - x_body) x dir) to the body's block of row `row`.
void add_point(MatrixXd& J, Index row, const SystemState& state, int body, const Vec2& point, const Vec2& dir,
               double sign) {
  if (body == kWorld) return;
  const Index c = 3 * static_cast<Index>(body);
  const Vec2 r = point - state.x[static_cast<std::size_t>(body)].head<2>();
  J(row, c) += sign * dir.x();
  J(row, c + 1) += sign * dir.y();
  J(row, c + 2) += sign * cross2(r, dir);
}

void add_angular(MatrixXd& J, Index row, int body, double sign) {
  if (body == kWorld) return;
  J(row, 3 * static_cast<Index>(body) + 2) += sign;
}

Vec2 axis_world(const ConstraintDef& def, const SystemState& state) {
  const Vec2 axis = def.axis.normalized();
  if (def.axis_in_world || def.body_a == kWorld) return axis;
  return rotate(pose_of(state, def.body_a).z(), axis);
}

void check_finite(const SystemState& state) {
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    if (!state.x[i].allFinite() || !state.v[i].allFinite()) {
      throw SolverError(SolverError::Kind::NonFinite, "non-finite pose or velocity for body " + std::to_string(i),
                        static_cast<std::ptrdiff_t>(i));
    }
  }
}

}  // namespace

int MultibodySystem::rows_of(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Hinge:
    case ConstraintKind::Prismatic: return 2;
    case ConstraintKind::Lock:
    case ConstraintKind::Motor: return 1;
    case ConstraintKind::ContactNormal:
    case ConstraintKind::ContactTangent: break;
  }
  throw InvalidArgument("contact rows are generated by collision detection, not declared");
}

int MultibodySystem::add_body(Body body) {
  if (!(body.mass > 0.0) || !(body.inertia > 0.0)) throw InvalidArgument("body '" + body.name + "' needs mass > 0 and inertia > 0");
  if (!body.pose.allFinite() || !body.velocity.allFinite()) throw InvalidArgument("body '" + body.name + "' has a non-finite state");
  bodies_.push_back(std::move(body));
  return static_cast<int>(bodies_.size()) - 1;
}

int MultibodySystem::add_constraint(ConstraintDef def) {
  const int n = static_cast<int>(bodies_.size());
  if (def.body_b < 0 || def.body_b >= n || def.body_a < kWorld || def.body_a >= n || def.body_a == def.body_b) {
    throw InvalidArgument("constraint '" + def.name + "' references invalid bodies");
  }
  if (def.kind == ConstraintKind::Motor && !(def.max_effort > 0.0)) {
    throw InvalidArgument("motor '" + def.name + "' needs max_effort > 0");
  }
  const int rows = rows_of(def.kind);
  const int index = static_cast<int>(constraints_.size());
  if (def.kind == ConstraintKind::Motor) motors_.push_back(index);
  row_offset_.push_back(joint_rows_);
  joint_rows_ += rows;
  constraints_.push_back(std::move(def));
  return index;
}

int MultibodySystem::add_collider(Collider collider) {
  if (collider.body < kWorld || collider.body >= static_cast<int>(bodies_.size())) {
    throw InvalidArgument("collider '" + collider.name + "' references an invalid body");
  }
  colliders_.push_back(std::move(collider));
  return static_cast<int>(colliders_.size()) - 1;
}

int MultibodySystem::add_pair(CollisionPair pair) {
  const int n = static_cast<int>(colliders_.size());
  if (pair.collider_a < 0 || pair.collider_a >= n || pair.collider_b < 0 || pair.collider_b >= n) {
    throw InvalidArgument("collision pair '" + pair.name + "' references invalid colliders");
  }
  if (std::holds_alternative<HalfPlaneShape>(colliders_[static_cast<std::size_t>(pair.collider_a)].shape) &&
      std::holds_alternative<HalfPlaneShape>(colliders_[static_cast<std::size_t>(pair.collider_b)].shape)) {
    throw InvalidArgument("collision pair '" + pair.name + "' joins two half-planes");
  }
  pairs_.push_back(std::move(pair));
  return static_cast<int>(pairs_.size()) - 1;
}

void MultibodySystem::set_uncertain_mass_body(int body, double inertia_per_kg) {
  if (body < 0 || body >= static_cast<int>(bodies_.size()) || !(inertia_per_kg > 0.0)) {
    throw InvalidArgument("invalid uncertain-mass body");
  }
  uncertain_body_ = body;
  inertia_per_kg_ = inertia_per_kg;
}

void MultibodySystem::set_external_force(int body, const Vec3& load) {
  if (body < 0 || body >= static_cast<int>(bodies_.size()) || !load.allFinite()) {
    throw InvalidArgument("invalid external load");
  }
  bodies_[static_cast<std::size_t>(body)].external_force = load;
}

double MultibodySystem::body_mass(int body, const WorldParams& params) const {
  return body == uncertain_body_ ? params.mass : bodies_[static_cast<std::size_t>(body)].mass;
}

double MultibodySystem::body_inertia(int body, const WorldParams& params) const {
  return body == uncertain_body_ ? params.mass * inertia_per_kg_ : bodies_[static_cast<std::size_t>(body)].inertia;
}

double MultibodySystem::pair_friction(int pair, const WorldParams& params) const {
  const CollisionPair& p = pairs_[static_cast<std::size_t>(pair)];
  return p.uncertain_friction ? params.friction : p.mu;
}

SystemState MultibodySystem::initial_state() const {
  SystemState s;
  for (const auto& b : bodies_) {
    s.x.push_back(b.pose);
    s.v.push_back(b.velocity);
  }
  s.joint_lambda = VectorXd::Zero(joint_rows_);
  return s;
}

Assembly assemble(const MultibodySystem& system, const SystemState& state, const VectorXd& control,
                  const WorldParams& params, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (control.size() != system.motor_count()) throw InvalidArgument("control vector size does not match motor count");
  if (!control.allFinite()) throw SolverError(SolverError::Kind::NonFinite, "non-finite control");
  check_finite(state);

  const SystemConfig& cfg = system.config();
  const auto nb = static_cast<Index>(system.bodies().size());
  const Index dofs = 3 * nb;

  Assembly out;
  out.contacts = detect_contacts(system, state, params);
  const Index jrows = system.joint_rows();
  const Index rows = jrows + 2 * static_cast<Index>(out.contacts.size());
  const Index n = dofs + rows;
  out.body_dofs = dofs;
  out.joint_rows = jrows;

  MatrixXd J = MatrixXd::Zero(rows, dofs);
  VectorXd r = VectorXd::Zero(rows);
  VectorXd sigma = VectorXd::Constant(rows, cfg.compliance);
  VectorXd lo = VectorXd::Constant(rows, -kInf);
  VectorXd hi = VectorXd::Constant(rows, kInf);

  auto stab = [&](const ConstraintDef& d) { return (d.stabilization >= 0.0 ? d.stabilization : cfg.stabilization) / dt; };
  auto reg = [&](const ConstraintDef& d) { return d.regularization >= 0.0 ? d.regularization : cfg.compliance; };

  int motor = 0;
  for (std::size_t ci = 0; ci < system.constraints().size(); ++ci) {
    const ConstraintDef& d = system.constraints()[ci];
    const Index row = system.row_offset(static_cast<int>(ci));
    const Vec2 pa = anchor_world(state, d.body_a, d.anchor_a);
    const Vec2 pb = anchor_world(state, d.body_b, d.anchor_b);
    const double phi_a = pose_of(state, d.body_a).z();
    const double phi_b = pose_of(state, d.body_b).z();
    switch (d.kind) {
      case ConstraintKind::Hinge: {
        const Vec2 err = pb - pa;
        for (int k = 0; k < 2; ++k) {
          const Vec2 e = k == 0 ? Vec2::UnitX() : Vec2::UnitY();
          add_point(J, row + k, state, d.body_b, pb, e, 1.0);
          add_point(J, row + k, state, d.body_a, pa, e, -1.0);
          r[row + k] = -stab(d) * err[k];
          sigma[row + k] = reg(d);
        }
        break;
      }
      case ConstraintKind::Prismatic: {
        const Vec2 axis = axis_world(d, state);
        const Vec2 nrm = perp(axis);
        const bool world_frame = d.axis_in_world || d.body_a == kWorld;
        add_point(J, row, state, d.body_b, pb, nrm, 1.0);
        // A rotating axis also sweeps the line, so body a's lever runs to pb.
        add_point(J, row, state, d.body_a, world_frame ? pa : pb, nrm, -1.0);
        r[row] = -stab(d) * nrm.dot(pb - pa);
        sigma[row] = reg(d);
        add_angular(J, row + 1, d.body_b, 1.0);
        double ref = 0.0;
        if (!world_frame) {
          add_angular(J, row + 1, d.body_a, -1.0);
          ref = phi_a;
        }
        r[row + 1] = -stab(d) * (phi_b - ref - d.offset);
        sigma[row + 1] = reg(d);
        break;
      }
      case ConstraintKind::Lock: {
        add_angular(J, row, d.body_b, 1.0);
        add_angular(J, row, d.body_a, -1.0);
        r[row] = -stab(d) * (phi_b - phi_a - d.offset);
        sigma[row] = reg(d);
        break;
      }
      case ConstraintKind::Motor: {
        if (d.motor_mode == MotorMode::Angular) {
          add_angular(J, row, d.body_b, 1.0);
          add_angular(J, row, d.body_a, -1.0);
        } else {
          const Vec2 axis = axis_world(d, state);
          const bool world_frame = d.axis_in_world || d.body_a == kWorld;
          add_point(J, row, state, d.body_b, pb, axis, 1.0);
          add_point(J, row, state, d.body_a, world_frame ? pa : pb, axis, -1.0);
        }
        r[row] = control[motor++];
        sigma[row] = reg(d);
        lo[row] = -d.max_effort * dt;
        hi[row] = d.max_effort * dt;
        break;
      }
      case ConstraintKind::ContactNormal:
      case ConstraintKind::ContactTangent: break;
    }
  }

  std::vector<FrictionLink> links;
  const double beta = cfg.stabilization / dt;
  for (std::size_t k = 0; k < out.contacts.size(); ++k) {
    const Contact& c = out.contacts[k];
    const Index rn = jrows + 2 * static_cast<Index>(k);
    const Index rt = rn + 1;
    const Vec2 t = perp(c.normal);
    add_point(J, rn, state, c.body_b, c.point, c.normal, 1.0);
    add_point(J, rn, state, c.body_a, c.point, c.normal, -1.0);
    add_point(J, rt, state, c.body_b, c.point, t, 1.0);
    add_point(J, rt, state, c.body_a, c.point, t, -1.0);
    // Speculative when separated, Baumgarte when penetrating.
    r[rn] = c.gap > 0.0 ? -c.gap / dt : -beta * c.gap;
    lo[rn] = 0.0;
    links.push_back({dofs + rt, dofs + rn, c.mu});
  }

  MLCPProblem& p = out.problem;
  p.H = MatrixXd::Zero(n, n);
  p.rhs = VectorXd::Zero(n);
  p.lower = VectorXd::Constant(n, -kInf);
  p.upper = VectorXd::Constant(n, kInf);
  for (Index b = 0; b < nb; ++b) {
    const Body& body = system.bodies()[static_cast<std::size_t>(b)];
    const double m = system.body_mass(static_cast<int>(b), params);
    const double inertia = system.body_inertia(static_cast<int>(b), params);
    const Vec3& v = state.v[static_cast<std::size_t>(b)];
    p.H(3 * b, 3 * b) = m;
    p.H(3 * b + 1, 3 * b + 1) = m;
    p.H(3 * b + 2, 3 * b + 2) = inertia;
    const Vec3 f = Vec3(m * cfg.gravity.x(), m * cfg.gravity.y(), 0.0) + body.external_force;
    p.rhs[3 * b] = m * v.x() + dt * f.x();
    p.rhs[3 * b + 1] = m * v.y() + dt * f.y();
    p.rhs[3 * b + 2] = inertia * v.z() + dt * f.z();
  }
  p.H.topRightCorner(dofs, rows) = -J.transpose();
  p.H.bottomLeftCorner(rows, dofs) = J;
  p.H.bottomRightCorner(rows, rows).diagonal() = sigma;
  p.rhs.tail(rows) = r;
  p.lower.tail(rows) = lo;
  p.upper.tail(rows) = hi;
  p.friction_links = std::move(links);

  // Warm start: previous velocities and multipliers, contacts matched by feature.
  out.warm_start = VectorXd::Zero(n);
  for (Index b = 0; b < nb; ++b) out.warm_start.segment<3>(3 * b) = state.v[static_cast<std::size_t>(b)];
  if (state.joint_lambda.size() == jrows) out.warm_start.segment(dofs, jrows) = state.joint_lambda * dt;
  std::map<std::pair<int, int>, const Contact*> previous;
  for (const auto& c : state.contacts) previous[{c.pair, c.feature}] = &c;
  for (std::size_t k = 0; k < out.contacts.size(); ++k) {
    const auto it = previous.find({out.contacts[k].pair, out.contacts[k].feature});
    if (it == previous.end()) continue;
    const Index rn = dofs + jrows + 2 * static_cast<Index>(k);
    out.warm_start[rn] = it->second->lambda_n * dt;
    out.warm_start[rn + 1] = it->second->lambda_t * dt;
  }
  return out;
}

SystemState step(const MultibodySystem& system, const SystemState& state, const VectorXd& control,
                 const WorldParams& params, double dt) {
  Assembly a = assemble(system, state, control, params, dt);
  MLCPSolution sol;
  if (system.config().solver == SolverKind::Direct) {
    DirectOptions opts;
    opts.max_size = system.config().direct_cap;
    opts.initial_y = a.warm_start;
    sol = solve_direct(a.problem, opts);
  } else {
    PgsOptions opts = system.config().pgs;
    opts.initial_y = a.warm_start;
    sol = solve_pgs(a.problem, opts);
  }

  SystemState next;
  next.step = state.step + 1;
  next.x.resize(state.x.size());
  next.v.resize(state.v.size());
  for (std::size_t b = 0; b < state.x.size(); ++b) {
    next.v[b] = sol.y.segment<3>(3 * static_cast<Index>(b));
    next.x[b] = state.x[b] + dt * next.v[b];
  }
  next.joint_lambda = sol.y.segment(a.body_dofs, a.joint_rows) / dt;
  next.contacts = std::move(a.contacts);
  for (std::size_t k = 0; k < next.contacts.size(); ++k) {
    const Index rn = a.body_dofs + a.joint_rows + 2 * static_cast<Index>(k);
    next.contacts[k].lambda_n = sol.y[rn] / dt;
    next.contacts[k].lambda_t = sol.y[rn + 1] / dt;
  }
  next.solver_residual = sol.residual;
  return next;
}

double motor_position(const MultibodySystem& system, const SystemState& state, int motor) {
  const ConstraintDef& d = system.constraints()[static_cast<std::size_t>(system.motors().at(static_cast<std::size_t>(motor)))];
  if (d.motor_mode == MotorMode::Angular) return pose_of(state, d.body_b).z() - pose_of(state, d.body_a).z();
  const Vec2 pa = anchor_world(state, d.body_a, d.anchor_a);
  const Vec2 pb = anchor_world(state, d.body_b, d.anchor_b);
  return axis_world(d, state).dot(pb - pa);
}

double motor_effort(const MultibodySystem& system, const SystemState& state, int motor) {
  const int c = system.motors().at(static_cast<std::size_t>(motor));
  return state.joint_lambda[system.row_offset(c)];
}

double motor_limit(const MultibodySystem& system, int motor) {
  return system.constraints()[static_cast<std::size_t>(system.motors().at(static_cast<std::size_t>(motor)))].max_effort;
}

double mechanical_energy(const MultibodySystem& system, const SystemState& state, const WorldParams& params) {
  double e = 0.0;
  const Vec2 g = system.config().gravity;
  for (std::size_t b = 0; b < state.x.size(); ++b) {
    const double m = system.body_mass(static_cast<int>(b), params);
    const double inertia = system.body_inertia(static_cast<int>(b), params);
    const Vec3& v = state.v[b];
    e += 0.5 * m * v.head<2>().squaredNorm() + 0.5 * inertia * v.z() * v.z();
    e -= m * g.dot(state.x[b].head<2>());
  }
  return e;
}

}  // namespace psf
