#include "traclin/rigid.hpp"

#include <Eigen/Dense>

namespace traclin {

double l2_inner(const HexMesh& mesh, const NodalField& u, const NodalField& v) {
  check_compatible(mesh, u);
  check_compatible(mesh, v);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements()[e];
    for (int q = 0; q < HexMesh::kQp; ++q) {
      Vec3 uq, vq;
      for (int a = 0; a < 8; ++a) {
        const double n = mesh.shape(q, a);
        uq += n * u[el[static_cast<std::size_t>(a)]];
        vq += n * v[el[static_cast<std::size_t>(a)]];
      }
      s += mesh.qp_weight() * dot(uq, vq);
    }
  }
  return s;
}

RigidBasis::RigidBasis(const HexMesh& mesh) {
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = Vec3::unit(k);
    fields_[static_cast<std::size_t>(k)] = NodalField::sample(mesh, [&](const Vec3&) { return e; });
    fields_[static_cast<std::size_t>(k + 3)] = NodalField::sample(mesh, [&](const Vec3& x) { return cross(e, x); });
  }
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i; j < 6; ++j) gram_[i][j] = gram_[j][i] = l2_inner(mesh, fields_[i], fields_[j]);
}

RigidSplit project_rigid(const HexMesh& mesh, const NodalField& v) {
  const RigidBasis basis(mesh);
  Eigen::Matrix<double, 6, 6> g;
  Eigen::Matrix<double, 6, 1> rhs;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) g(i, j) = basis.gram()[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    rhs(i) = l2_inner(mesh, basis.field(i), v);
  }
  const Eigen::Matrix<double, 6, 1> c = g.ldlt().solve(rhs);
  RigidSplit out{RigidMotion{{c(3), c(4), c(5)}, {c(0), c(1), c(2)}}, v};
  for (std::size_t n = 0; n < mesh.node_count(); ++n) out.remainder[n] -= out.rigid(mesh.nodes()[n]);
  return out;
}

}  // namespace traclin
