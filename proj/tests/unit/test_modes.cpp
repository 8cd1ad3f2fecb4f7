#include <doctest.h>

#include "support.hpp"

#include <algorithm>

using namespace trapscape;
using oracle::rel_err;
constexpr double um = units::um;

namespace {

std::vector<double> axial_frequencies(const ModeSpectrum& s) {
  std::vector<double> f;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.labels[k].axis == ModeAxis::z) f.push_back(s.frequencies[static_cast<Eigen::Index>(k)]);
  std::sort(f.begin(), f.end());
  return f;
}

TrapModel double_well_at(double ratio, double f_z_hz, double v_rf = 85.0) {
  TrapModel m = canonical_model(ratio, v_rf);
  m.axial_wells = wells_at_nodes(find_nodes(m), units::angular(f_z_hz));
  return m;
}

}  // namespace

TEST_SUITE("modes") {

TEST_CASE("single ion z-z curvature is m omega^2") {
  const TrapModel m = oracle::single_well_model(190e3, 0.0, 0.0);
  const CrystalState s = solve_equilibrium(m, 1);
  const Eigen::MatrixXd h = hessian(m, s);
  const double w = units::angular(190e3);
  CHECK(rel_err(h(2, 2), m.species.mass * w * w) < 1e-9);
}

TEST_CASE("unconverged state is rejected") {
  const TrapModel m = oracle::single_well_model(190e3);
  CrystalState s = seed_crystal(m, std::vector<int>{3});
  s.converged = false;
  CHECK_THROWS_AS(hessian(m, s), StateError);
  CHECK_THROWS_AS(normal_modes(m, s), StateError);
}

TEST_CASE("hessian against finite differences of the gradient") {
  const TrapModel m = double_well_at(0.95, 190e3);
  const CrystalState s = solve_equilibrium(m, 3);
  const Eigen::MatrixXd h = hessian(m, s);
  Eigen::VectorXd x(9);
  for (int i = 0; i < 3; ++i) x.segment<3>(3 * i) = s.positions[i];
  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g = [&](const Eigen::VectorXd& v) {
    std::vector<Vec3> q(3);
    for (int i = 0; i < 3; ++i) q[i] = v.segment<3>(3 * i);
    return energy_gradient(m, q, s.string_labels);
  };
  CHECK(oracle::vec_rel_err(h, oracle::fd_jacobian(g, x, 1e-9)) < 1e-5);
  CHECK((h - h.transpose()).norm() <= 1e-12 * h.norm());
}

TEST_CASE("three-ion axial ratios 1 : sqrt(3) : sqrt(29/5)") {
  const TrapModel m = oracle::single_well_model(190e3);
  const ModeSpectrum sp = normal_modes(m, solve_equilibrium(m, 3));
  const auto f = axial_frequencies(sp);
  REQUIRE(f.size() == 3);
  CHECK(rel_err(f[0], units::angular(190e3)) < 1e-9);
  CHECK(rel_err(f[1] / f[0], std::sqrt(3.0)) < 1e-4);
  CHECK(rel_err(f[2] / f[0], std::sqrt(29.0 / 5.0)) < 1e-4);
}

TEST_CASE("trace identity, eigen residuals and relabelling") {
  const TrapModel m = double_well_at(0.95, 190e3);
  const CrystalState s = solve_equilibrium(m, 4);
  const ModeSpectrum sp = normal_modes(m, s);
  const TrapPotential tp(m);

  double ext = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    ext += tp.hessian(s.positions[i], static_cast<std::size_t>(s.string_labels[i])).trace();
  CHECK(rel_err(sp.eigenvalues.sum(), ext / m.species.mass) < 1e-8);

  const Eigen::MatrixXd h = hessian(m, s) / m.species.mass;
  const double scale = sp.eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k) {
    const Eigen::VectorXd v = sp.eigenvectors.col(k);
    CHECK((h * v - sp.eigenvalues[k] * v).norm() < 1e-8 * scale);
  }
  CHECK((sp.eigenvectors.transpose() * sp.eigenvectors - Eigen::MatrixXd::Identity(12, 12)).norm() < 1e-10);

  CrystalState p = s;
  std::reverse(p.positions.begin(), p.positions.end());
  std::reverse(p.string_labels.begin(), p.string_labels.end());
  const ModeSpectrum sq = normal_modes(m, p);
  for (Eigen::Index k = 0; k < sp.frequencies.size(); ++k)
    CHECK(rel_err(sp.frequencies[k], sq.frequencies[k]) < 1e-10);
}

TEST_CASE("two-string quartet: COM in phase at omega_z0, labels complete") {
  const double fz = 190e3;
  const TrapModel m = double_well_at(1.0, fz);
  const ModeSpectrum sp = normal_modes(m, solve_equilibrium(m, 4));
  const AxialQuartet q = axial_quartet(sp);
  CHECK(rel_err(q.com_in, units::angular(fz)) < 1e-9);
  CHECK(q.stretch_in > q.com_in);
  CHECK(q.com_splitting() == doctest::Approx((q.com_out - q.com_in) / q.com_in));

  int counted = 0;
  for (const auto& l : sp.labels) {
    if (l.axis != ModeAxis::z) continue;
    ++counted;
    CHECK(l.pattern != ModePattern::other);
    CHECK(l.phase != ModePhase::none);
    CHECK(l.overlap > kLabelThreshold);
  }
  CHECK(counted == 4);
}

TEST_CASE("quartet lookup fails on a single string") {
  const TrapModel m = oracle::single_well_model(190e3);
  const ModeSpectrum sp = normal_modes(m, solve_equilibrium(m, 2));
  CHECK_THROWS_AS(axial_quartet(sp), NumericalError);
}

TEST_CASE("classification of synthetic vectors") {
  const TrapModel m = oracle::single_well_model(190e3);
  const CrystalState s = solve_equilibrium(m, 2);
  Eigen::VectorXd com = Eigen::VectorXd::Zero(6), str = Eigen::VectorXd::Zero(6), mixed = Eigen::VectorXd::Zero(6);
  com[2] = com[5] = 1 / std::sqrt(2.0);
  const auto z = s.string_members(0);
  str[3 * static_cast<Eigen::Index>(z[0]) + 2] = -1 / std::sqrt(2.0);
  str[3 * static_cast<Eigen::Index>(z[1]) + 2] = 1 / std::sqrt(2.0);
  mixed[0] = mixed[5] = 1 / std::sqrt(2.0);
  const ModeLabel lc = classify_mode(com, s), ls = classify_mode(str, s), lm = classify_mode(mixed, s);
  CHECK(lc.axis == ModeAxis::z);
  CHECK(lc.pattern == ModePattern::com);
  CHECK(lc.phase == ModePhase::none);
  CHECK(ls.pattern == ModePattern::stretch);
  CHECK(lm.pattern == ModePattern::other);
  CHECK(to_string(ModePhase::none) == "n/a");
}

TEST_CASE("degeneracy sweep is thread independent") {
  DegeneracyOptions o;
  const std::vector<double> r{0.9, 1.0, 1.1};
  o.threads = 1;
  const auto a = degeneracy_sweep(canonical_model(0.0), r, o);
  o.threads = 3;
  const auto b = degeneracy_sweep(canonical_model(0.0), r, o);
  for (std::size_t i = 0; i < r.size(); ++i) {
    REQUIRE(a[i].ok());
    CHECK(a[i].separation == b[i].separation);
    CHECK(a[i].normalized.com_out == b[i].normalized.com_out);
    CHECK(a[i].normalized.stretch_out == b[i].normalized.stretch_out);
  }
  const auto bad = degeneracy_point(canonical_model(0.0), 0.3, o);
  CHECK_FALSE(bad.ok());
}

}  // TEST_SUITE
