// Numerical properties that need whole sweeps or full crystals.

#include <doctest.h>

#include "support.hpp"

#include <cmath>

using namespace trapscape;
constexpr double um = units::um;

namespace {

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9));
  for (int i = 0; i <= n; ++i) v.push_back(a + step * i);
  return v;
}

PairedCrystal crystal_at(double separation_um) {
  const TrapModel m = canonical_model(0.0, 120.0);
  return paired_crystal(m, ratio_for_separation(m, separation_um * um));
}

std::vector<double> one_period(double spacing) {
  std::vector<double> o;
  for (int i = 0; i <= 100; ++i) o.push_back(spacing * i / 100.0);
  return o;
}

}  // namespace

TEST_CASE("node separation grows strictly above the critical ratio") {
  const TrapModel m = canonical_model(0.0);
  const CriticalRatio c = critical_ratio(m, 1e-4);
  const auto pts = separation_sweep(m, grid(c.r_hi + 0.01, 1.0, 0.005), {}, 0);
  double last = 0.0;
  for (const auto& p : pts) {
    REQUIRE(p.separation.has_value());
    CHECK(*p.separation > last);
    last = *p.separation;
  }
}

const std::vector<DegeneracyPoint>& two_by_two_sweep() {
  static const std::vector<DegeneracyPoint> pts = [] {
    DegeneracyOptions o;
    o.threads = 0;
    return degeneracy_sweep(canonical_model(0.0), grid(0.862, 1.5, 0.022), o);
  }();
  return pts;
}

TEST_CASE("2x2 in/out splittings shrink as the strings separate") {
  double last_d = 0.0, last_com = INFINITY, last_str = INFINITY;
  for (const auto& p : two_by_two_sweep()) {
    REQUIRE(p.ok());
    CHECK(p.separation > last_d);
    const double com = std::abs(p.normalized.com_splitting());
    const double str = std::abs(p.normalized.stretch_splitting());
    CHECK(com < last_com);
    CHECK(str < last_str);
    last_d = p.separation;
    last_com = com;
    last_str = str;
  }
}

TEST_CASE("2x2 stretch modes sit at or above sqrt(3)") {
  for (const auto& p : two_by_two_sweep()) {
    REQUIRE(p.ok());
    CHECK(p.normalized.stretch_in >= std::sqrt(3.0) * (1 - 1e-9));
    CHECK(p.normalized.stretch_out >= std::sqrt(3.0) * (1 - 1e-9));
  }
}

TEST_CASE("2x2 stretch modes approach sqrt(3) from below as the strings separate") {
  double last = INFINITY;
  for (const auto& p : two_by_two_sweep()) {
    REQUIRE(p.ok());
    const double gap = std::sqrt(3.0) - p.normalized.stretch_in;
    CHECK(gap > 0.0);
    CHECK(gap < last);
    last = gap;
  }
}

TEST_CASE("eta falls as the strings separate at 120 V and 15 kHz") {
  EtaSweepOptions o;
  o.threads = 0;
  const auto pts = eta_sweep(canonical_model(0.0, 120.0), grid(0.862, 0.95, 0.004), o);
  double last_d = 0.0, last_eta = INFINITY;
  for (const auto& p : pts) {
    REQUIRE(p.ok());
    CHECK(p.separation > last_d);
    CHECK(p.eta < last_eta);
    last_d = p.separation;
    last_eta = p.eta;
  }
}

TEST_CASE("omega_int drops when the separation doubles") {
  const PairedCrystal a = crystal_at(30);
  const PairedCrystal b = crystal_at(60);
  CHECK(omega_int(b.model, b.state, 0) < omega_int(a.model, a.state, 0));
}

TEST_CASE("weak corrugation slides smoothly without hysteresis") {
  const PairedCrystal p = crystal_at(42);
  const EtaPoint e = eta_point(canonical_model(0.0, 120.0), p.model.drive.ratio_r);
  REQUIRE(e.ok());
  MESSAGE("eta = " << e.eta);
  CHECK(e.eta < 0.4);
  const CorrugationProfile prof = corrugation_potential(p.model, p.state, 1, 11);
  const Hysteresis h = slide_hysteresis(p.model, p.state, one_period(prof.spacing));
  REQUIRE(h.forward.complete());
  REQUIRE(h.backward.complete());
  MESSAGE("slips = " << h.forward.slip_count() << ", hysteresis = " << h.max_position_difference / units::nm << " nm");
  CHECK(h.forward.slip_count() == 0);
  CHECK(h.max_position_difference < 1 * units::nm);
}

TEST_CASE("strong corrugation sticks and slips within one period") {
  const PairedCrystal p = crystal_at(22);
  const EtaPoint e = eta_point(canonical_model(0.0, 120.0), p.model.drive.ratio_r);
  REQUIRE(e.ok());
  MESSAGE("eta = " << e.eta);
  CHECK(e.eta >= 1.3);
  const CorrugationProfile prof = corrugation_potential(p.model, p.state, 1, 11);
  const SlideTrajectory t = quasi_static_slide(p.model, p.state, one_period(prof.spacing));
  REQUIRE(t.complete());
  MESSAGE("slips = " << t.slip_count());
  CHECK(t.slip_count() >= 1);
}
