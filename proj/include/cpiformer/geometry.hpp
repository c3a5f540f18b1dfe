//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_GEOMETRY_HPP_
#define CPIFORMER_GEOMETRY_HPP_

#include <cmath>

namespace cpiformer {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3 &o) const = default;
};

inline double dot(const Vec3 &a, const Vec3 &b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }

inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

}  // namespace cpiformer

#endif  // CPIFORMER_GEOMETRY_HPP_
