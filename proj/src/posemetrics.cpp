#include "visyreve/posemetrics.hpp"

#include <cmath>
#include <numbers>

#include "visyreve/error.hpp"

namespace visyreve {

namespace {

constexpr double kZeroRotation = 1e-12;

double bdd_formula(double theta, double phi) {
  using std::numbers::pi;
  return (theta / pi) * (1.0 - std::abs(2.0 * phi / pi - 1.0));
}

}  // namespace

BddValue bdd(const Quaternion& a, const Quaternion& b) {
  const Quaternion rel = a * b.conjugate();  // canonical, w >= 0
  const Vec3 v = rel.vec();
  BddValue out;
  out.theta = 2.0 * std::atan2(v.norm(), rel.w());
  if (out.theta < kZeroRotation) {
    out.theta = 0.0;
    return out;
  }
  out.axis = v / std::sin(0.5 * out.theta);
  out.axis_plus = {out.axis.x(), out.axis.y(), std::abs(out.axis.z())};
  out.phi = std::atan2(std::hypot(out.axis_plus.x(), out.axis_plus.y()), out.axis_plus.z());
  out.value = bdd_formula(out.theta, out.phi);
  return out;
}

BddValue bdd(const Pose& a, const Pose& b) { return bdd(a.rotation, b.rotation); }

double bdd_value(const Quaternion& a, const Quaternion& b) { return bdd(a, b).value; }

double cl2(const Pose& a, const Pose& b) {
  return (camera_center(a) - camera_center(b)).norm();
}

double rotation_magnitude(const Quaternion& a, const Quaternion& b) {
  const Quaternion rel = a * b.conjugate();
  const double theta = 2.0 * std::atan2(rel.vec().norm(), rel.w());
  return theta < kZeroRotation ? 0.0 : theta;
}

double rotation_magnitude(const Pose& a, const Pose& b) {
  return rotation_magnitude(a.rotation, b.rotation);
}

double spec_combined(const Pose& a, const Pose& b, double weight) {
  if (!(weight > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "spec_combined weight must be > 0");
  }
  return weight * cl2(a, b) + rotation_magnitude(a, b);
}

DistanceKind DistanceKind::spec_combined(double weight_position) {
  if (!(weight_position > 0.0) || !std::isfinite(weight_position)) {
    throw Error(ErrorCode::InvalidArgument, "SpecCombined weight must be > 0");
  }
  return DistanceKind(Type::SpecCombined, weight_position);
}

DistanceKind DistanceKind::parse(std::string_view name, double weight_position) {
  if (name == "bdd") return bdd();
  if (name == "cl2") return cl2();
  if (name == "rotmag") return rotation_magnitude();
  if (name == "spec") return spec_combined(weight_position);
  throw Error(ErrorCode::InvalidArgument, "unknown distance kind '" + std::string(name) + "'");
}

std::string DistanceKind::name() const {
  switch (type_) {
    case Type::Bdd: return "bdd";
    case Type::Cl2: return "cl2";
    case Type::RotationMagnitude: return "rotmag";
    case Type::SpecCombined: return "spec";
  }
  return "unknown";
}

double distance(const DistanceKind& kind, const Pose& a, const Pose& b) {
  switch (kind.type()) {
    case DistanceKind::Type::Bdd: return bdd_value(a.rotation, b.rotation);
    case DistanceKind::Type::Cl2: return cl2(a, b);
    case DistanceKind::Type::RotationMagnitude: return rotation_magnitude(a, b);
    case DistanceKind::Type::SpecCombined: return spec_combined(a, b, kind.weight_position());
  }
  return 0.0;
}

}  // namespace visyreve
