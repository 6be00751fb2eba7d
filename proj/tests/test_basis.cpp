#include "mfie/basis.hpp"

#include <gtest/gtest.h>

using namespace mfie;

namespace {

std::shared_ptr<const TriangleMesh> cube(int d = 1) { return std::make_shared<const TriangleMesh>(make_cuboid(1.0, d)); }

Bary edge_point(const TriangleMesh& m, int t, const Edge& e, double s) {
  // barycentric point at parameter s along the edge from vertices[0] to vertices[1]
  Bary b{0, 0, 0};
  const auto& tv = m.triangles()[t];
  for (int i = 0; i < 3; ++i) {
    if (tv[i] == e.vertices[0]) b[i] = 1.0 - s;
    if (tv[i] == e.vertices[1]) b[i] = s;
  }
  return b;
}

}  // namespace

TEST(BasisSet, Counts) {
  EXPECT_EQ(build_basis(cube(), BasisOrder::lo).size(), 18);
  const BasisSet ho = build_basis(cube(), BasisOrder::full_first);
  EXPECT_EQ(ho.size(), 36);
  EXPECT_EQ(ho.num_lo(), 18);
  const auto sphere = std::make_shared<const TriangleMesh>(make_sphere(1.0, 1));
  EXPECT_EQ(build_basis(sphere, BasisOrder::full_first).size(), 2 * 120);
  EXPECT_EQ(build_basis(cube(2), BasisOrder::full_first).size(), 144);
}

TEST(BasisSet, OutsideSupportThrows) {
  const BasisSet b = build_basis(cube(), BasisOrder::lo);
  const BasisFunction& f = b.function(0);
  int other = 0;
  while (other == f.plus_triangle || other == f.minus_triangle) ++other;
  EXPECT_THROW((void)eval_basis(b, 0, other, {1.0 / 3, 1.0 / 3, 1.0 / 3}), DomainError);
}

TEST(BasisSet, RwgVanishesAtFreeVertex) {
  const BasisSet b = build_basis(cube(2), BasisOrder::full_first);
  const TriangleMesh& m = b.mesh();
  for (int n = 0; n < b.size(); ++n) {
    const BasisFunction& f = b.function(n);
    const Edge& e = m.edges()[f.edge];
    for (int side = 0; side < 2; ++side) {
      Bary bary{0, 0, 0};
      bary[e.local[side]] = 1.0;
      EXPECT_LT(eval_basis(b, n, e.triangles[side], bary).norm(), 1e-14);
    }
  }
}

TEST(BasisSet, NormalComponentContinuousAcrossEdge) {
  const BasisSet b = build_basis(cube(2), BasisOrder::full_first);
  const TriangleMesh& m = b.mesh();
  for (int n = 0; n < b.size(); ++n) {
    const BasisFunction& f = b.function(n);
    const Edge& e = m.edges()[f.edge];
    const Vec3 ev = m.vertices()[e.vertices[1]] - m.vertices()[e.vertices[0]];
    const int tp = e.triangles[0], tm = e.triangles[1];
    // outward in-plane edge normals of each triangle
    const Vec3 np = ev.cross(m.normal(tp)).normalized();
    const Vec3 nm = ev.cross(m.normal(tm)).normalized() * -1.0;
    for (double s : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      const double fp = eval_basis(b, n, tp, edge_point(m, tp, e, s)).dot(np);
      const double fm = eval_basis(b, n, tm, edge_point(m, tm, e, s)).dot(nm);
      // flux leaves the plus triangle and enters the minus triangle
      EXPECT_NEAR(fp, -fm, 1e-13);
      if (f.kind == FunctionKind::lo) EXPECT_NEAR(fp, 1.0, 1e-13);
      else EXPECT_NEAR(fp, 1.0 - 2.0 * s, 1e-13);
    }
    // other two edges of each triangle carry no normal flux
    for (int side = 0; side < 2; ++side) {
      const int t = e.triangles[side];
      for (int j = 0; j < 3; ++j) {
        const int ej = m.triangle_edge(t, j);
        if (ej == f.edge) continue;
        const Edge& other = m.edges()[ej];
        const Vec3 ov = m.vertices()[other.vertices[1]] - m.vertices()[other.vertices[0]];
        const Vec3 on = ov.cross(m.normal(t)).normalized();
        EXPECT_NEAR(eval_basis(b, n, t, edge_point(m, t, other, 0.3)).dot(on), 0.0, 1e-13);
      }
    }
  }
}

TEST(BasisSet, HierarchicalVanishesAtEdgeMidpoint) {
  const BasisSet b = build_basis(cube(), BasisOrder::full_first);
  const TriangleMesh& m = b.mesh();
  for (int n = b.num_lo(); n < b.size(); ++n) {
    const Edge& e = m.edges()[b.function(n).edge];
    for (int side = 0; side < 2; ++side) {
      EXPECT_LT(eval_basis(b, n, e.triangles[side], edge_point(m, e.triangles[side], e, 0.5)).norm(), 1e-14);
    }
  }
}

TEST(BasisSet, RotatedFunctionIsTangentAndOrthogonal) {
  const BasisSet b = build_basis(cube(2), BasisOrder::full_first);
  const Bary p{0.2, 0.3, 0.5};
  for (int n = 0; n < b.size(); ++n) {
    const int t = b.function(n).plus_triangle;
    const Vec3 beta = eval_basis(b, n, t, p), alpha = eval_rotated(b, n, t, p);
    EXPECT_NEAR(alpha.norm(), beta.norm(), 1e-14);
    EXPECT_NEAR(alpha.dot(beta), 0.0, 1e-14);
    EXPECT_NEAR(alpha.dot(b.mesh().normal(t)), 0.0, 1e-14);
    EXPECT_NEAR(alpha.cross(b.mesh().normal(t)).dot(beta), -beta.squaredNorm(), 1e-13);
  }
}

TEST(BasisSet, RwgDivergenceOnUnitRightTriangle) {
  // tetrahedron with a right-angle corner at the origin; face z = 0 has area 1/2
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<TriangleMesh::Tri> t = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  const auto mesh = std::make_shared<const TriangleMesh>(v, t);
  const BasisSet b = build_basis(mesh, BasisOrder::lo);
  for (int n = 0; n < b.size(); ++n) {
    const Edge& e = mesh->edges()[b.function(n).edge];
    const double len = (mesh->vertices()[e.vertices[1]] - mesh->vertices()[e.vertices[0]]).norm();
    if (std::abs(len - 1.0) > 1e-14) continue;
    for (int side = 0; side < 2; ++side) {
      const int tri = e.triangles[side];
      if (std::abs(mesh->area(tri) - 0.5) > 1e-14) continue;
      EXPECT_NEAR(surface_divergence(b, n, tri), side == 0 ? 2.0 : -2.0, 1e-14);
    }
  }
}

TEST(BasisSet, ZeroNetCharge) {
  for (BasisOrder order : {BasisOrder::lo, BasisOrder::full_first}) {
    const BasisSet b = build_basis(cube(2), order);
    const QuadratureRule rule = gauss_triangle_rule(2);
    for (int n = 0; n < b.size(); ++n) {
      const BasisFunction& f = b.function(n);
      double q = 0.0;
      for (int t : {f.plus_triangle, f.minus_triangle}) {
        for (std::size_t i = 0; i < rule.size(); ++i) {
          q += rule.weights[i] * b.mesh().area(t) * surface_divergence(b, n, t, rule.points[i]);
        }
      }
      EXPECT_NEAR(q, 0.0, 1e-12);
    }
  }
}

TEST(BasisSet, HierarchicalDivergenceMatchesFiniteDifference) {
  const auto sphere = std::make_shared<const TriangleMesh>(make_sphere(1.0, 1));
  const BasisSet b = build_basis(sphere, BasisOrder::full_first);
  const double h = 1e-6;
  for (int n = 0; n < b.size(); n += 7) {
    const int t = b.function(n).minus_triangle;
    const LocalBasis& lb = b.local(t);
    const Vec3 r = lb.tri.point({0.3, 0.45, 0.25});
    const Vec3 e1 = (lb.tri.v[1] - lb.tri.v[0]).normalized();
    const Vec3 e2 = lb.tri.n.cross(e1);
    const int s = b.slot(n, t);
    auto f = [&](const Vec3& p) { return lb.value(s, p, lb.tri.barycentric(p)); };
    const double fd = (f(r + h * e1) - f(r - h * e1)).dot(e1) / (2 * h) + (f(r + h * e2) - f(r - h * e2)).dot(e2) / (2 * h);
    EXPECT_NEAR(surface_divergence(b, n, t, lb.tri.barycentric(r)), fd, 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST(BasisSet, JetMatchesFiniteDifference) {
  const auto sphere = std::make_shared<const TriangleMesh>(make_sphere(1.0, 1));
  const BasisSet b = build_basis(sphere, BasisOrder::full_first);
  const LocalBasis& lb = b.local(5);
  const Vec3 r = lb.tri.point({0.6, 0.1, 0.3});
  const auto jet = lb.jet(r);
  const double h = 1e-6;
  const Vec3 e1 = (lb.tri.v[2] - lb.tri.v[0]).normalized();
  const LocalBasis::Values fd = (lb.values(r + h * e1) - lb.values(r - h * e1)) / (2 * h);
  const LocalBasis::Values an = jet.gradient[0] * e1.x() + jet.gradient[1] * e1.y() + jet.gradient[2] * e1.z();
  EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BasisSet, FullFirstEdgeTracesAreUnisolvent) {
  // the six local functions are independent, and any normal flux that is
  // linear along each of the three edges is matched by exactly one combination
  const BasisSet b = build_basis(cube(2), BasisOrder::full_first);
  const LocalBasis& lb = b.local(7);
  auto trace = [&](int slot, int edge, double s) {
    // edge i runs from vertex i+1 to i+2; outward normal in the plane
    const int p = (edge + 1) % 3, q = (edge + 2) % 3;
    Bary bary{0, 0, 0};
    bary[p] = 1.0 - s;
    bary[q] = s;
    const Vec3 dir = lb.tri.v[q] - lb.tri.v[p];
    const Vec3 out = dir.cross(lb.tri.n).normalized();
    return lb.value(slot, lb.tri.point(bary), bary).dot(out);
  };
  Eigen::Matrix<double, 6, 6> M;
  for (int e = 0; e < 3; ++e) {
    for (int s = 0; s < 6; ++s) {
      M(2 * e, s) = trace(s, e, 0.0);
      M(2 * e + 1, s) = trace(s, e, 1.0);
    }
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(M);
  EXPECT_EQ(lu.rank(), 6);
  Eigen::Matrix<double, 6, 1> target;
  target << 0.3, -1.2, 0.7, 0.1, -0.4, 2.0;
  const Eigen::Matrix<double, 6, 1> c = lu.solve(target);
  for (int e = 0; e < 3; ++e) {
    for (double s : {0.2, 0.5, 0.9}) {
      double v = 0.0;
      for (int k = 0; k < 6; ++k) v += c[k] * trace(k, e, s);
      EXPECT_NEAR(v, (1 - s) * target[2 * e] + s * target[2 * e + 1], 1e-12);
    }
  }
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(M.leftCols(3)).rank(), 3);
}
