#pragma once

#include <array>

#include "traclin/domain.hpp"

namespace traclin {

/// Rigid displacement x ↦ a ∧ x + b.
struct RigidMotion {
  Vec3 a;
  Vec3 b;

  Vec3 operator()(const Vec3& x) const { return cross(a, x) + b; }
};

/// The six fields e_a (translations) and e_a ∧ x (rotations) sampled on a mesh, with their L² Gram matrix.
class RigidBasis {
 public:
  explicit RigidBasis(const HexMesh& mesh);

  const NodalField& field(int k) const { return fields_[static_cast<std::size_t>(k)]; }
  /// L² inner products (consistent mass matrix, 2×2×2 Gauss).
  const std::array<std::array<double, 6>, 6>& gram() const { return gram_; }

 private:
  std::array<NodalField, 6> fields_;
  std::array<std::array<double, 6>, 6> gram_{};
};

/// L² inner product of two nodal fields by 2×2×2 Gauss quadrature (exact for Q1 products).
double l2_inner(const HexMesh& mesh, const NodalField& u, const NodalField& v);

struct RigidSplit {
  RigidMotion rigid;
  NodalField remainder;
};

/// L² projection onto rigid displacements; the remainder is L²-orthogonal to all six basis fields.
RigidSplit project_rigid(const HexMesh& mesh, const NodalField& v);

}  // namespace traclin
