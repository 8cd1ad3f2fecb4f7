#include <doctest.h>

#include "support.hpp"

using namespace trapscape;
using oracle::rel_err;
constexpr double um = units::um;

namespace {

Vec2 random_point(std::mt19937_64& g) {
  return {oracle::uniform(g, -150, 150) * um, oracle::uniform(g, 5, 200) * um};
}

double strip_voltage(const StripElectrode& s, const DriveConfig& d) {
  switch (s.role) {
    case ElectrodeRole::rf: return d.v_rf;
    case ElectrodeRole::center_rf: return d.ratio_r * d.v_rf;
    default: return 0.0;
  }
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("validation") {
  DriveConfig d;
  d.v_rf = -1;
  CHECK_THROWS_AS(d.validate(), DomainError);
  IonSpecies s = IonSpecies::calcium40();
  CHECK(s.mass == doctest::Approx(40 * constants::atomic_mass_unit).epsilon(1e-15));
  s.mass = 0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  AxialConfinement w;
  w.omega_z = -1;
  CHECK_THROWS_AS(w.validate(), DomainError);
}

TEST_CASE("RF field is the superposition of strip fields") {
  for (double r : {0.0, 0.5, 0.9}) {
    const TrapModel m = canonical_model(r);
    const RfField f(m);
    auto g = oracle::rng(20);
    for (int i = 0; i < 50; ++i) {
      const Vec2 p = random_point(g);
      Vec2 e = Vec2::Zero();
      for (const auto& s : m.geometry.effective_strips()) e -= strip_potential_gradient(s, strip_voltage(s, m.drive), p);
      CHECK(oracle::vec_rel_err(f.field(p), e) < 1e-10);
    }
  }
}

TEST_CASE("mirror symmetry") {
  for (double r : {0.0, 0.5, 0.9, 1.2}) {
    const TrapModel m = canonical_model(r);
    const Pseudopotential pp(m);
    auto g = oracle::rng(21);
    for (int i = 0; i < 40; ++i) {
      const Vec2 p = random_point(g);
      CHECK(rel_err(pp.value(p), pp.value({-p.x(), p.y()})) < 1e-12);
      CHECK(std::abs(rf_field(m, {0.0, p.y()}).x()) <= 1e-12 * rf_field(m, {0.0, p.y()}).norm());
    }
  }
}

TEST_CASE("centre electrode weakens the field below the original node") {
  const Vec2 p{0.0, 20 * um};
  const double e0 = std::abs(rf_field(canonical_model(0.0), p).y());
  const double e5 = std::abs(rf_field(canonical_model(0.5), p).y());
  CHECK(e5 < e0);
}

TEST_CASE("pseudopotential is nonnegative, zero at the node, quadratic in v_rf") {
  const TrapModel m = canonical_model(0.0);
  const Pseudopotential pp(m);
  auto g = oracle::rng(22);
  for (int i = 0; i < 100; ++i) CHECK(pp.value(random_point(g)) >= 0.0);

  NodeSearchOptions o;
  o.compute_barrier = false;
  const NodeSet nodes = find_nodes(m, o);
  REQUIRE(nodes.nodes.size() == 1);
  CHECK(pp.field().magnitude(nodes.nodes[0]) < 1e-4);
  CHECK(pp.value(nodes.nodes[0]) < 1e-12 * units::mev);

  const TrapModel m2 = canonical_model(0.7, 3.0 * 85.0);
  const Pseudopotential p1(canonical_model(0.7)), p3(m2);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p = random_point(g);
    CHECK(rel_err(p3.value(p), 9.0 * p1.value(p)) < 1e-13);
  }
}

TEST_CASE("field jacobian and pseudopotential derivatives against finite differences") {
  for (double r : {0.0, 0.9}) {
    const TrapModel m = canonical_model(r);
    const Pseudopotential pp(m);
    auto g = oracle::rng(23);
    for (int i = 0; i < 100; ++i) {
      const Vec2 p = random_point(g);
      const Mat2 j = pp.field().jacobian(p);
      CHECK(std::abs(j(0, 1) - j(1, 0)) <= 1e-12 * j.norm());
      CHECK(std::abs(j.trace()) <= 1e-12 * j.norm());

      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ef = [&](const Eigen::VectorXd& q) {
        return Eigen::VectorXd(pp.field().field(Vec2(q)));
      };
      CHECK(oracle::vec_rel_err(Eigen::MatrixXd(j), oracle::fd_jacobian(ef, Eigen::VectorXd(p), 1e-9)) < 1e-6);

      const std::function<double(const Vec2&)> f = [&](const Vec2& q) { return pp.value(q); };
      CHECK(oracle::vec_rel_err(pp.gradient(p), oracle::fd_gradient<2>(f, p, 1e-9)) < 1e-6);

      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gf = [&](const Eigen::VectorXd& q) {
        return Eigen::VectorXd(pp.gradient(Vec2(q)));
      };
      CHECK(oracle::vec_rel_err(Eigen::MatrixXd(pp.hessian(p)), oracle::fd_jacobian(gf, Eigen::VectorXd(p), 1e-9)) <
            1e-5);
    }
  }
}

TEST_CASE("axial wells") {
  const double fz = 190e3;
  const double w = units::angular(fz);
  const TrapModel m = oracle::single_well_model(fz, 0.0, 0.0);
  const TrapPotential tp(m);
  const Vec3 c{m.axial_wells[0].center_xy.x(), m.axial_wells[0].center_xy.y(), 0.0};
  CHECK(tp.value(c, 0) < 1e-12 * units::mev);
  CHECK(tp.axial_value(c, 0) == 0.0);

  const double delta = 3 * um;
  const double du = tp.value(c + Vec3(0, 0, delta), 0) - tp.value(c, 0);
  CHECK(rel_err(du, 0.5 * tp.mass() * w * w * delta * delta) < 1e-9);

  const double h = 1 * um;
  const double curv = (tp.value(c + Vec3(0, 0, h), 0) - 2 * tp.value(c, 0) + tp.value(c - Vec3(0, 0, h), 0)) / (h * h);
  CHECK(rel_err(curv / tp.mass(), w * w) < 1e-9);
  CHECK(rel_err(tp.hessian(c, 0)(2, 2) / tp.mass(), w * w) < 1e-12);
  CHECK_THROWS(tp.well(5));
}

TEST_CASE("Laplace-consistent deconfinement") {
  const TrapModel m = oracle::single_well_model(190e3, 0.5, 0.5);
  const TrapPotential tp(m);
  auto g = oracle::rng(24);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p{oracle::uniform(g, -50, 50) * um, oracle::uniform(g, 100, 250) * um, oracle::uniform(g, -50, 50) * um};
    const std::function<double(const Vec3&)> dc = [&](const Vec3& q) { return tp.axial_value(q, 0); };
    CHECK(std::abs(oracle::fd_laplacian(dc, p, 1 * um)) < 1e-6 * tp.hessian(p, 0)(2, 2));

    const std::function<double(const Vec3&)> f = [&](const Vec3& q) { return tp.value(q, 0); };
    CHECK(oracle::vec_rel_err(tp.gradient(p, 0), oracle::fd_gradient<3>(f, p, 1e-9)) < 1e-6);
  }
}

TEST_CASE("grid consistency and minima") {
  GridSpec spec;
  spec.n_x = 61;
  spec.n_y = 50;
  const TrapModel m0 = canonical_model(0.0);
  const PotentialGrid g0 = pseudopotential_grid(m0, spec, 2);
  for (std::size_t iy = 0; iy < g0.n_y(); iy += 7)
    for (std::size_t ix = 0; ix < g0.n_x(); ix += 5)
      CHECK(g0.at(ix, iy) == pseudopotential(m0, {g0.x[ix], g0.y[iy]}));
  const auto min0 = g0.local_minima();
  REQUIRE(min0.size() == 1);
  CHECK(std::abs(g0.x[min0[0].first]) < 1e-12);

  const PotentialGrid g9 = pseudopotential_grid(canonical_model(0.9), spec, 3);
  const auto min9 = g9.local_minima();
  REQUIRE(min9.size() == 2);
  CHECK(g9.x[min9[0].first] == doctest::Approx(-g9.x[min9[1].first]));
  CHECK(min9[0].second == min9[1].second);

  const PotentialGrid g9s = pseudopotential_grid(canonical_model(0.9), spec, 1);
  CHECK(g9s.values == g9.values);
  CHECK(g9s.clipped == g9.clipped);
}

TEST_CASE("stability parameter scales linearly with v_rf") {
  const Vec2 p{10 * um, 80 * um};
  const double q1 = Pseudopotential(canonical_model(0.9)).stability_q(p);
  const double q2 = Pseudopotential(canonical_model(0.9, 170.0)).stability_q(p);
  CHECK(q1 > 0);
  CHECK(rel_err(q2, 2 * q1) < 1e-12);
}

}  // TEST_SUITE
