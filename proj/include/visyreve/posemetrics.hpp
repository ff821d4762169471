#pragma once

#include <string>
#include <string_view>

#include "visyreve/geometry.hpp"

namespace visyreve {

/// Boresight Deviation Distance of a pose pair, with its intermediates.
///
/// value = (theta / pi) * (1 - |2 phi / pi - 1|), where theta in [0, pi] is
/// the magnitude of the relative rotation and phi in [0, pi/2] the angle
/// between its axis (folded onto the +z hemisphere) and the boresight.
///
/// BDD is attitude-only and vanishes for any relative rotation about the
/// boresight, so it is a pseudometric on SO(3): distinct attitudes can be at
/// distance 0, and the triangle inequality does not hold in general.
struct BddValue {
  double value = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  Vec3 axis = Vec3::Zero();       // omega_r
  Vec3 axis_plus = Vec3::Zero();  // omega_r folded to omega_z >= 0
};

BddValue bdd(const Quaternion& a, const Quaternion& b);
BddValue bdd(const Pose& a, const Pose& b);

/// Scalar BDD without the diagnostic intermediates.
double bdd_value(const Quaternion& a, const Quaternion& b);

/// Euclidean distance between camera centers (meters).
double cl2(const Pose& a, const Pose& b);

/// Magnitude of the relative rotation, in [0, pi].
double rotation_magnitude(const Quaternion& a, const Quaternion& b);
double rotation_magnitude(const Pose& a, const Pose& b);

/// weight * cl2 + rotation_magnitude; weight in 1/meters must be positive.
double spec_combined(const Pose& a, const Pose& b, double weight);

class DistanceKind {
 public:
  enum class Type { Bdd, Cl2, RotationMagnitude, SpecCombined };

  static DistanceKind bdd() { return DistanceKind(Type::Bdd, 0.0); }
  static DistanceKind cl2() { return DistanceKind(Type::Cl2, 0.0); }
  static DistanceKind rotation_magnitude() { return DistanceKind(Type::RotationMagnitude, 0.0); }
  /// Throws InvalidArgument unless weight > 0.
  static DistanceKind spec_combined(double weight_position);

  /// Parses "bdd", "cl2", "rotmag" or "spec"; "spec" needs a weight.
  static DistanceKind parse(std::string_view name, double weight_position = 0.0);

  Type type() const { return type_; }
  double weight_position() const { return weight_; }
  /// True when the distance satisfies the triangle inequality.
  bool is_metric() const { return type_ != Type::Bdd; }
  std::string name() const;

  bool operator==(const DistanceKind&) const = default;

 private:
  DistanceKind(Type type, double weight) : type_(type), weight_(weight) {}
  Type type_;
  double weight_;
};

double distance(const DistanceKind& kind, const Pose& a, const Pose& b);

}  // namespace visyreve
