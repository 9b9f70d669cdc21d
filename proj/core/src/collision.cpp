#include <array>
#include <cmath>

#include "psf/dynamics.hpp"

namespace psf {

namespace {

struct Polygon {
  std::array<Vec2, 4> v;  // counter-clockwise
  std::array<Vec2, 4> n;  // outward normal of edge v[i] -> v[i+1]
};

Polygon world_rect(const RectShape& rect, const Vec3& pose) {
  const Vec2 pos = pose.head<2>();
  const double hx = rect.half_extents.x();
  const double hz = rect.half_extents.y();
  const std::array<Vec2, 4> local{Vec2{-hx, -hz}, Vec2{hx, -hz}, Vec2{hx, hz}, Vec2{-hx, hz}};
  const std::array<Vec2, 4> normals{Vec2{0, -1}, Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}};
  Polygon p;
  for (std::size_t i = 0; i < 4; ++i) {
    p.v[i] = pos + rotate(pose.z(), rect.center + local[i]);
    p.n[i] = rotate(pose.z(), normals[i]);
  }
  return p;
}

double max_separation(const Polygon& a, const Polygon& b, int& edge) {
  double best = -kInf;
  for (int i = 0; i < 4; ++i) {
    double s = kInf;
    for (const auto& vb : b.v) s = std::min(s, a.n[static_cast<std::size_t>(i)].dot(vb - a.v[static_cast<std::size_t>(i)]));
    if (s > best) {
      best = s;
      edge = i;
    }
  }
  return best;
}

struct ClipVertex {
  Vec2 p;
  int id;
};

// Keeps the part of the segment with dir . p <= offset.
int clip(const std::array<ClipVertex, 2>& in, std::array<ClipVertex, 2>& out, const Vec2& dir, double offset,
         int new_id) {
  int count = 0;
  const double d0 = dir.dot(in[0].p) - offset;
  const double d1 = dir.dot(in[1].p) - offset;
  if (d0 <= 0.0) out[static_cast<std::size_t>(count++)] = in[0];
  if (d1 <= 0.0) out[static_cast<std::size_t>(count++)] = in[1];
  if (d0 * d1 < 0.0 && count < 2) {
    const double t = d0 / (d0 - d1);
    out[static_cast<std::size_t>(count++)] = ClipVertex{in[0].p + t * (in[1].p - in[0].p), new_id};
  }
  return count;
}

void collide_rects(const Polygon& a, const Polygon& b, double margin, std::vector<Contact>& out, Contact proto) {
  int edge_a = 0;
  int edge_b = 0;
  const double sep_a = max_separation(a, b, edge_a);
  if (sep_a > margin) return;
  const double sep_b = max_separation(b, a, edge_b);
  if (sep_b > margin) return;

  const Polygon* ref = &a;
  const Polygon* inc = &b;
  int edge = edge_a;
  bool flip = false;
  if (sep_b > sep_a + 1e-9) {
    ref = &b;
    inc = &a;
    edge = edge_b;
    flip = true;
  }

  const Vec2 n_ref = ref->n[static_cast<std::size_t>(edge)];
  int inc_edge = 0;
  double min_dot = kInf;
  for (int i = 0; i < 4; ++i) {
    const double d = n_ref.dot(inc->n[static_cast<std::size_t>(i)]);
    if (d < min_dot) {
      min_dot = d;
      inc_edge = i;
    }
  }
  const std::array<ClipVertex, 2> incident{ClipVertex{inc->v[static_cast<std::size_t>(inc_edge)], 0},
                                           ClipVertex{inc->v[static_cast<std::size_t>((inc_edge + 1) % 4)], 1}};
  const Vec2 v1 = ref->v[static_cast<std::size_t>(edge)];
  const Vec2 v2 = ref->v[static_cast<std::size_t>((edge + 1) % 4)];
  const Vec2 tangent = (v2 - v1).normalized();

  std::array<ClipVertex, 2> c1{};
  std::array<ClipVertex, 2> c2{};
  if (clip(incident, c1, -tangent, -tangent.dot(v1), 2) < 2) return;
  if (clip(c1, c2, tangent, tangent.dot(v2), 3) < 2) return;

  for (const auto& cv : c2) {
    const double sep = n_ref.dot(cv.p - v1);
    if (sep > margin) continue;
    Contact c = proto;
    c.point = cv.p;
    c.normal = flip ? Vec2(-n_ref) : n_ref;
    c.gap = sep;
    c.feature = (flip ? 128 : 0) | (edge << 5) | (inc_edge << 2) | cv.id;
    out.push_back(c);
  }
}

void collide_plane_rect(const HalfPlaneShape& plane, const Polygon& rect, bool plane_is_a, double margin,
                        std::vector<Contact>& out, Contact proto) {
  const Vec2 n = plane.normal.normalized();
  for (int i = 0; i < 4; ++i) {
    const Vec2& corner = rect.v[static_cast<std::size_t>(i)];
    const double gap = n.dot(corner) - plane.offset;
    if (gap > margin) continue;
    Contact c = proto;
    c.point = corner;
    c.normal = plane_is_a ? n : Vec2(-n);
    c.gap = gap;
    c.feature = i;
    out.push_back(c);
  }
}

Vec3 pose_of(const SystemState& state, int body) {
  return body == kWorld ? Vec3::Zero() : state.x[static_cast<std::size_t>(body)];
}

}  // namespace

std::vector<Contact> detect_contacts(const MultibodySystem& system, const SystemState& state,
                                     const WorldParams& params) {
  std::vector<Contact> out;
  const double margin = system.config().contact_margin;
  for (std::size_t p = 0; p < system.pairs().size(); ++p) {
    const CollisionPair& pair = system.pairs()[p];
    const Collider& ca = system.colliders()[static_cast<std::size_t>(pair.collider_a)];
    const Collider& cb = system.colliders()[static_cast<std::size_t>(pair.collider_b)];
    Contact proto;
    proto.pair = static_cast<int>(p);
    proto.body_a = ca.body;
    proto.body_b = cb.body;
    proto.mu = system.pair_friction(static_cast<int>(p), params);

    const auto* ra = std::get_if<RectShape>(&ca.shape);
    const auto* rb = std::get_if<RectShape>(&cb.shape);
    if (ra && rb) {
      collide_rects(world_rect(*ra, pose_of(state, ca.body)), world_rect(*rb, pose_of(state, cb.body)), margin, out,
                    proto);
    } else if (!ra && rb) {
      collide_plane_rect(std::get<HalfPlaneShape>(ca.shape), world_rect(*rb, pose_of(state, cb.body)), true, margin,
                         out, proto);
    } else if (ra && !rb) {
      collide_plane_rect(std::get<HalfPlaneShape>(cb.shape), world_rect(*ra, pose_of(state, ca.body)), false, margin,
                         out, proto);
    }
  }
  return out;
}

}  // namespace psf
