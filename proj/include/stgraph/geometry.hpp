#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <string>

#include "stgraph/errors.hpp"

namespace stgraph {

// A 2D or 3D point. Unused components stay zero so the arithmetic below
// never has to branch on dimensionality.
struct Point {
  std::array<double, 3> v{0.0, 0.0, 0.0};
  int dim = 2;

  double x() const { return v[0]; }
  double y() const { return v[1]; }
  double z() const { return v[2]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
};

inline Point make_point2(double x, double y) { return Point{{x, y, 0.0}, 2}; }
inline Point make_point3(double x, double y, double z) { return Point{{x, y, z}, 3}; }

inline bool operator==(const Point& a, const Point& b) {
  return a.dim == b.dim && a.v == b.v;
}
inline bool operator!=(const Point& a, const Point& b) { return !(a == b); }

inline Point operator-(const Point& a, const Point& b) {
  Point r;
  r.dim = a.dim;
  for (int i = 0; i < 3; ++i) r.v[static_cast<std::size_t>(i)] = a[i] - b[i];
  return r;
}
inline Point operator+(const Point& a, const Point& b) {
  Point r;
  r.dim = a.dim;
  for (int i = 0; i < 3; ++i) r.v[static_cast<std::size_t>(i)] = a[i] + b[i];
  return r;
}
inline Point operator*(double s, const Point& a) {
  Point r;
  r.dim = a.dim;
  for (int i = 0; i < 3; ++i) r.v[static_cast<std::size_t>(i)] = s * a[i];
  return r;
}

inline double dot(const Point& a, const Point& b) {
  return a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
}

inline Point cross(const Point& a, const Point& b) {
  return Point{{a.y() * b.z() - a.z() * b.y(),
                a.z() * b.x() - a.x() * b.z(),
                a.x() * b.y() - a.y() * b.x()},
               3};
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

// Angle between two displacement vectors, in [0, pi]. Uses atan2 of the
// cross magnitude against the dot product; stable near 0 and pi where the
// arccos form loses digits. Zero-length conventions: both zero -> 0,
// exactly one zero -> pi.
inline double angle_between(const Point& a, const Point& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return std::acos(-1.0);
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

// Axis-aligned box given by its min and max corners.
struct Box {
  Point lo;
  Point hi;

  int dim() const { return lo.dim; }
  double side(int axis) const { return hi[axis] - lo[axis]; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= side(i);
    return v;
  }
};

inline bool operator==(const Box& a, const Box& b) { return a.lo == b.lo && a.hi == b.hi; }

// Intersection-over-union of two axis-aligned boxes (area in 2D, volume in
// 3D). Degenerate boxes have measure zero; two such boxes score 0.
inline double box_iou(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("box dimensionality mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
  }
  double inter = 1.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double lo = std::max(a.lo[i], b.lo[i]);
    const double hi = std::min(a.hi[i], b.hi[i]);
    if (hi <= lo) return 0.0;
    inter *= hi - lo;
  }
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

// Proper rotation in 2D or 3D, stored as a row-major matrix. The padded
// third row/column of a 2D rotation is the identity so `apply` is uniform.
class Rotation {
 public:
  static Rotation planar(double angle) {
    Rotation r;
    r.dim_ = 2;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    r.m_ = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
    return r;
  }

  // Rodrigues form; `axis` need not be unit length.
  static Rotation axis_angle(const Point& axis, double angle) {
    const double n = norm(axis);
    if (n == 0.0) throw NotARotationError("zero rotation axis");
    const double ux = axis.x() / n, uy = axis.y() / n, uz = axis.z() / n;
    const double c = std::cos(angle), s = std::sin(angle), k = 1.0 - c;
    Rotation r;
    r.dim_ = 3;
    r.m_ = {{{c + ux * ux * k, ux * uy * k - uz * s, ux * uz * k + uy * s},
             {uy * ux * k + uz * s, c + uy * uy * k, uy * uz * k - ux * s},
             {uz * ux * k - uy * s, uz * uy * k + ux * s, c + uz * uz * k}}};
    return r;
  }

  static Rotation from_matrix2(const std::array<std::array<double, 2>, 2>& m) {
    Rotation r;
    r.dim_ = 2;
    r.m_ = {{{m[0][0], m[0][1], 0.0}, {m[1][0], m[1][1], 0.0}, {0.0, 0.0, 1.0}}};
    r.validate();
    return r;
  }

  static Rotation from_matrix3(const std::array<std::array<double, 3>, 3>& m) {
    Rotation r;
    r.dim_ = 3;
    r.m_ = m;
    r.validate();
    return r;
  }

  int dim() const { return dim_; }

  Point apply(const Point& p) const {
    if (p.dim != dim_) {
      throw DimensionError("rotating a " + std::to_string(p.dim) + "D point with a " +
                           std::to_string(dim_) + "D rotation");
    }
    Point out;
    out.dim = p.dim;
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += m_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * p[j];
      out[i] = acc;
    }
    return out;
  }

  double determinant() const {
    const auto& m = m_;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  // R^T R must equal I to 1e-9 and det(R) must be positive.
  void validate() const {
    double max_dev = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k)
          acc += m_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                 m_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        max_dev = std::max(max_dev, std::abs(acc - (i == j ? 1.0 : 0.0)));
      }
    }
    if (max_dev > 1e-9) {
      throw NotARotationError("matrix is not orthonormal (max |R^T R - I| = " +
                              std::to_string(max_dev) + ")");
    }
    if (determinant() <= 0.0) throw NotARotationError("matrix determinant is not positive");
  }

 private:
  int dim_ = 2;
  std::array<std::array<double, 3>, 3> m_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
};

}  // namespace stgraph
