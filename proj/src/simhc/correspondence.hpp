#pragma once

#include "simhc/geometry.hpp"

namespace simhc {

enum class ProblemKind { Upnp, Grps };

const char* to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const char* name);

// 2D-3D generalized correspondence: alpha f + v = R p + t.
struct Correspondence2D3D {
  Vec3 p;  // world point
  Vec3 f;  // unit bearing
  Vec3 v;  // ray origin in the rig frame
};

// 2D-2D generalized correspondence:
// alpha f + v = R (alpha' f' + s v') + t.
struct Correspondence2D2D {
  Vec3 f;
  Vec3 v;
  Vec3 f2;
  Vec3 v2;
};

}  // namespace simhc
