#pragma once

#include <string>
#include <vector>

namespace psf {

// Uncertain world parameters: box mass [kg] and pad-box friction coefficient.
struct WorldParams {
  double mass = 0.25;
  double friction = 0.5;

  bool operator==(const WorldParams&) const = default;
};

struct ParamBounds {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  std::string units;

  bool operator==(const ParamBounds&) const = default;
};

// Bounded support D of the uncertain parameters, one entry per dimension
// (mass first, friction second).
struct ParamDomain {
  ParamBounds mass{"mass", 0.05, 2.0, "kg"};
  ParamBounds friction{"friction", 0.05, 1.5, ""};

  bool contains(const WorldParams& p) const {
    return p.mass >= mass.lower && p.mass <= mass.upper && p.friction >= friction.lower &&
           p.friction <= friction.upper;
  }
  bool operator==(const ParamDomain&) const = default;
};

}  // namespace psf
