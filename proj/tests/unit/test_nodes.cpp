#include <doctest.h>

#include "support.hpp"

using namespace trapscape;
using oracle::rel_err;
constexpr double um = units::um;

TEST_SUITE("nodes") {

TEST_CASE("topology across R") {
  const NodeSet n0 = find_nodes(canonical_model(0.0));
  REQUIRE(n0.topology == NodeTopology::single);
  CHECK(std::abs(n0.nodes[0].x()) < 1e-9);
  CHECK_FALSE(n0.barrier.has_value());

  const NodeSet nv = find_nodes(canonical_model(0.84));
  REQUIRE(nv.topology == NodeTopology::vertical_pair);
  for (const auto& p : nv.nodes) CHECK(std::abs(p.x()) < 1e-9);

  const NodeSet nh = find_nodes(canonical_model(0.9));
  REQUIRE(nh.topology == NodeTopology::horizontal_pair);
  CHECK(std::abs(nh.nodes[0].x() + nh.nodes[1].x()) < 1e-9);
  CHECK(nh.nodes[0].y() == doctest::Approx(nh.nodes[1].y()).epsilon(1e-9));
  REQUIRE(nh.barrier.has_value());
  REQUIRE(nh.saddle.has_value());
  CHECK(std::abs(nh.saddle->x()) < 1e-9);
  CHECK(*nh.barrier > 0.0);
}

TEST_CASE("second on-axis node emerges where the surface field on axis reverses") {
  // On the axis at the surface, E_y vanishes when R / c = 1 / r1 - 1 / r2 for a centre
  // strip of half width c and RF strips spanning [r1, r2].
  const double c = 39.0, r1 = 73.0, r2 = 482.0;
  const double r_e = c * (1.0 / r1 - 1.0 / r2);
  CHECK(r_e == doctest::Approx(0.4533).epsilon(1e-4));
  const Vec2 surface{0.0, 1e-12};
  CHECK(rf_field(canonical_model(r_e - 1e-3), surface).y() * rf_field(canonical_model(r_e + 1e-3), surface).y() < 0);
  CHECK(std::abs(rf_field(canonical_model(r_e), surface).y()) < 1e-6 * rf_field(canonical_model(0.0), surface).norm());

  CHECK(find_nodes(canonical_model(r_e - 0.01)).topology == NodeTopology::single);
  const NodeSet above = find_nodes(canonical_model(0.5));
  REQUIRE(above.topology == NodeTopology::vertical_pair);
  CHECK(above.nodes.front().y() < 20 * um);
}

TEST_CASE("node contract: null field, positive semidefinite well") {
  for (double r : {0.0, 0.5, 0.84, 0.9, 1.2}) {
    const TrapModel m = canonical_model(r);
    const Pseudopotential pp(m);
    const NodeSet ns = find_nodes(m);
    for (const auto& p : ns.nodes) {
      CHECK(pp.field().magnitude(p) < 1e-4);
      if (ns.topology != NodeTopology::vertical_pair) {
        const Eigen::SelfAdjointEigenSolver<Mat2> es(pp.hessian(p));
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().cwiseAbs().maxCoeff());
      }
    }
  }
}

TEST_CASE("saddle is a stationary point of the pseudopotential") {
  for (double r : {0.9, 1.2, 1.5}) {
    const TrapModel m = canonical_model(r);
    const NodeSet ns = find_nodes(m);
    REQUIRE(ns.saddle.has_value());
    const Pseudopotential pp(m);
    const Mat2 h = pp.hessian(*ns.saddle);
    CHECK(pp.gradient(*ns.saddle).norm() < 1e-8 * h.norm() * um);
    CHECK(h.determinant() < 0.0);
    CHECK(rel_err(*ns.barrier, pp.value(*ns.saddle)) < 1e-14);
  }
}

TEST_CASE("v_rf scaling leaves node geometry alone and scales the barrier quadratically") {
  const NodeSet a = find_nodes(canonical_model(0.95, 85.0));
  const NodeSet b = find_nodes(canonical_model(0.95, 170.0));
  REQUIRE(a.nodes.size() == 2);
  REQUIRE(b.nodes.size() == 2);
  for (int i = 0; i < 2; ++i) CHECK((a.nodes[i] - b.nodes[i]).norm() < 1e-12);
  CHECK((*a.saddle - *b.saddle).norm() < 1e-12);
  CHECK(rel_err(*b.barrier, 4.0 * *a.barrier) < 1e-10);
  CHECK(rel_err(node_separation(a), node_separation(b)) < 1e-12);
}

TEST_CASE("node_separation requires a horizontal pair") {
  CHECK_THROWS_AS(node_separation(canonical_model(0.0)), StateError);
  CHECK(node_separation(canonical_model(0.9)) > 0.0);
}

TEST_CASE("invalid window") {
  NodeSearchOptions o;
  o.y_min = -1e-6;
  CHECK_THROWS_AS(find_nodes(canonical_model(0.5), o), DomainError);
}

TEST_CASE("sweep topologies, determinism and thread independence") {
  const std::vector<double> r{0.0, 0.4, 0.9};
  const auto s1 = separation_sweep(canonical_model(0.0), r, {}, 1);
  REQUIRE(s1.size() == 3);
  CHECK(s1[0].topology == NodeTopology::single);
  CHECK(s1[1].topology == NodeTopology::single);
  CHECK(s1[2].topology == NodeTopology::horizontal_pair);
  CHECK(s1[2].separation.has_value());

  const auto s3 = separation_sweep(canonical_model(0.0), r, {}, 3);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(s1[i].topology == s3[i].topology);
    CHECK(s1[i].separation == s3[i].separation);
    CHECK(s1[i].barrier == s3[i].barrier);
    CHECK(s1[i].nodes == s3[i].nodes);
  }
}

TEST_CASE("critical ratio contract and scale invariance") {
  const CriticalRatio c = critical_ratio(canonical_model(0.0), 1e-3);
  CHECK(c.width() <= 1e-3);
  CHECK(c.r_lo < c.r_hi);
  CHECK(find_nodes(canonical_model(c.r_hi)).topology == NodeTopology::horizontal_pair);
  CHECK(find_nodes(canonical_model(c.r_lo)).topology != NodeTopology::horizontal_pair);

  const CriticalRatio c2 = critical_ratio(canonical_model(0.0, 170.0), 1e-3);
  CHECK(c2.r_lo == c.r_lo);
  CHECK(c2.r_hi == c.r_hi);
}

TEST_CASE("ratio for a target separation") {
  const TrapModel m = canonical_model(0.0);
  const double r = ratio_for_separation(m, 30 * um);
  CHECK(node_separation(canonical_model(r)) == doctest::Approx(30 * um).epsilon(1e-6));
}

TEST_CASE("ratio sensitivity") {
  // Worst case: R (1 + e) / (1 - e) - R.
  CHECK(ratio_sensitivity(0.85, 0.03) == doctest::Approx(0.0525773195876289).epsilon(1e-12));
  CHECK(ratio_sensitivity(0.5, 0.03) == doctest::Approx(0.0309278350515464).epsilon(1e-12));
  CHECK(ratio_sensitivity(0.85, 0.0) == 0.0);
  CHECK_THROWS_AS(ratio_sensitivity(0.85, -0.1), DomainError);
}

TEST_CASE("wells at nodes") {
  const NodeSet ns = find_nodes(canonical_model(0.9));
  const auto wells = wells_at_nodes(ns, units::angular(15e3), 2 * um, 0.2, 0.3);
  REQUIRE(wells.size() == 2);
  CHECK(wells[1].center_xy == ns.nodes[1]);
  CHECK(wells[0].center_z == 2 * um);
  CHECK(wells[0].alpha == 0.2);
  CHECK(wells[0].beta == 0.3);
}

}  // TEST_SUITE
