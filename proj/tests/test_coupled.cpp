#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/models.hpp"
#include "support/oracles.hpp"
#include "swjd/coupled.hpp"

using namespace swjd;
using Catch::Approx;

namespace {

McOptions mc(double h, std::uint64_t seed, std::uint64_t paths) {
  McOptions o;
  o.sampler.step = h;
  o.sampler.seed = seed;
  o.paths = paths;
  o.workers = 2;
  return o;
}

BoundaryData right_indicator(int regimes) {
  return BoundaryData::uniform(regimes, std::make_shared<IndicatorField>(
                                            IndicatorField::halfspace(Point{1.0}, 1.0)));
}

}  // namespace

TEST_CASE("boundary term without switching equals the harmonic estimate on shared seeds") {
  ModelSpec m = testmodels::brownian_1d(0.5);
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  const BoundaryData phi = right_indicator(1);
  const McOptions o = mc(2e-3, 301, 4000);

  LatticeField v = estimate_boundary_term(m, 0, d, phi, lat, o);
  for (int n = 0; n < lat.size(); ++n) {
    McOptions oq = o;
    oq.sampler.stream_domain =
        node_stream_domain(o.sampler.stream_domain, kBoundaryTermSalt, n, 0);
    const EstimateResult direct = estimate_harmonic(m, d, phi, lat.node(n), 0, oq);
    REQUIRE(v.at(n, 0) == Approx(direct.value).margin(1e-12));
  }
}

TEST_CASE("boundary term with constant killing is a strict Feynman-Kac discount") {
  ModelSpec m = testmodels::two_regime_jump_killing_1d(0.8);
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  const BoundaryData one = BoundaryData::constant(2, 1.0);
  LatticeField v = estimate_boundary_term(m, 0, d, one, lat, mc(2e-3, 302, 8000));

  auto fd = oracle::solve_boundary_term_1d(m, 0, 0.0, 1.0, one, 500);
  for (int n = 0; n < lat.size(); ++n) {
    REQUIRE(v.at(n, 0) < 1.0);  // strictly discounted at interior nodes
    REQUIRE(std::abs(v.at(n, 0) - fd.eval(lat.node(n)[0], 0)) <
            3.0 * v.stderr_at(n, 0) + 2e-3);
  }
}

TEST_CASE("green_apply: zero field maps to exactly zero") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  LatticeField zero(&lat, 1);
  GreenApplyResult r = green_apply(m, 0, 1, d, zero, lat, mc(2e-3, 303, 1000));
  for (int n = 0; n < lat.size(); ++n) REQUIRE(r.values.at(n, 0) == 0.0);
}

TEST_CASE("green_apply: constant field scales the constant-integrand Green mass exactly") {
  // q_12 is constant, so G(q_12 * g) with g constant equals q_12 * g * G(1)
  // pathwise on shared seeds.
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  LatticeField ones(&lat, 1);
  for (int n = 0; n < lat.size(); ++n) ones.at(n, 0) = 1.0;
  const McOptions o = mc(2e-3, 304, 4000);
  GreenApplyResult applied = green_apply(m, 0, 1, d, ones, lat, o);

  for (int n = 0; n < lat.size(); ++n) {
    McOptions oq = o;
    oq.sampler.stream_domain =
        node_stream_domain(o.sampler.stream_domain, kGreenApplySalt, n, 0);
    // same paths, same weight, integrand q_12 * 1: equals q12 x the weighted
    // occupation integral computed through estimate_green with f = q12
    const EstimateResult g =
        estimate_green(m, 0, d, [&](const Point& x) { return m.switching.rate(x, 0, 1); },
                       lat.node(n), oq);
    REQUIRE(applied.values.at(n, 0) == Approx(g.value).margin(1e-12));
  }
}

TEST_CASE("green_apply: affine field matches the FD Green-operator oracle") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.1);
  LatticeField g(&lat, 1);
  for (int n = 0; n < lat.size(); ++n) g.at(n, 0) = 0.5 + lat.node(n)[0];
  GreenApplyResult applied = green_apply(m, 0, 1, d, g, lat, mc(1e-3, 305, 20000));

  // oracle: (L_1 + q_11) w = -q_12(x) g(x), w = 0 outside; affine g
  // interpolates exactly so the lattice field equals the function
  auto fd = oracle::solve_green_1d(
      m, 0, 0.0, 1.0,
      [&](double x) { return m.switching.rate(Point{x}, 0, 1) * (0.5 + x); }, 600);
  for (int n = 0; n < lat.size(); ++n) {
    INFO("node " << n << " mc=" << applied.values.at(n, 0)
                 << " fd=" << fd.eval(lat.node(n)[0], 0));
    REQUIRE(std::abs(applied.values.at(n, 0) - fd.eval(lat.node(n)[0], 0)) <
            3.0 * applied.values.stderr_at(n, 0) + 2e-3);
  }
}

TEST_CASE("fixed point: single regime converges immediately to the boundary term") {
  ModelSpec m = testmodels::brownian_1d(0.5);
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  FixedPointSolution sol =
      fixed_point_solve(m, d, right_indicator(1), lat, mc(2e-3, 306, 4000));
  REQUIRE(sol.trace.converged);
  REQUIRE(sol.trace.iterations == 1);
  for (int n = 0; n < lat.size(); ++n)
    REQUIRE(sol.u.at(n, 0) == Approx(sol.green.v(sol.green.index(n, 0))).margin(1e-12));
}

TEST_CASE("fixed point: decoupled regimes (Q = 0) converge in one iteration") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  m.switching = SwitchingMatrix::none(2);
  m.finalize();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  FixedPointSolution sol =
      fixed_point_solve(m, d, right_indicator(2), lat, mc(2e-3, 307, 4000));
  REQUIRE(sol.trace.converged);
  REQUIRE(sol.trace.iterations == 1);
}

TEST_CASE("fixed point: update norms contract and the solution matches the coupled oracle") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.1);
  const BoundaryData phi = right_indicator(2);
  FixedPointSolution sol = fixed_point_solve(m, d, phi, lat, mc(1e-3, 308, 20000), 200, 1e-6);

  REQUIRE(sol.trace.converged);
  REQUIRE(sol.trace.update_norms.size() >= 3);
  for (std::size_t k = 1; k < std::min<std::size_t>(4, sol.trace.update_norms.size()); ++k)
    REQUIRE(sol.trace.update_norms[k] < sol.trace.update_norms[k - 1]);

  auto fd = oracle::solve_harmonic_1d(m, 0.0, 1.0, phi, 800);
  for (int n = 0; n < lat.size(); ++n)
    for (int i = 0; i < 2; ++i) {
      INFO("node " << lat.node(n)[0] << " regime " << i << " fp=" << sol.u.at(n, i)
                   << " fd=" << fd.eval(lat.node(n)[0], i) << " se=" << sol.u.stderr_at(n, i));
      REQUIRE(std::abs(sol.u.at(n, i) - fd.eval(lat.node(n)[0], i)) <
              3.0 * sol.u.stderr_at(n, i) + 3e-3);
    }
}

TEST_CASE("pipeline is linear in the boundary data on shared seeds") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.2);
  const McOptions o = mc(2e-3, 309, 3000);

  const BoundaryData phi1 = right_indicator(2);
  const BoundaryData phi2 = BoundaryData::constant(2, 1.0);
  BoundaryData combo = BoundaryData::per_regime(
      {std::make_shared<AffineClampedField>(0.0, Point{0.0}, 0.0, 0.0),
       std::make_shared<AffineClampedField>(0.0, Point{0.0}, 0.0, 0.0)});
  // combo = 2 phi1 - 0.5 phi2 built as a custom field per regime
  struct Combo final : ScalarField {
    ScalarFieldPtr a, b;
    Combo(ScalarFieldPtr a_, ScalarFieldPtr b_) : a(a_), b(b_) {}
    double operator()(const Point& x) const override { return 2.0 * (*a)(x)-0.5 * (*b)(x); }
    std::pair<double, double> range() const override { return {-0.5, 2.0}; }
    std::string family() const override { return "combo"; }
  };
  combo = BoundaryData::per_regime({std::make_shared<Combo>(phi1.phi[0], phi2.phi[0]),
                                    std::make_shared<Combo>(phi1.phi[1], phi2.phi[1])});

  const int iters = 12;
  FixedPointSolution s1 = fixed_point_solve(m, d, phi1, lat, o, iters, 1e-30);
  FixedPointSolution s2 = fixed_point_solve(m, d, phi2, lat, o, iters, 1e-30);
  FixedPointSolution sc = fixed_point_solve(m, d, combo, lat, o, iters, 1e-30);
  for (int n = 0; n < lat.size(); ++n)
    for (int i = 0; i < 2; ++i)
      REQUIRE(sc.u.at(n, i) ==
              Approx(2.0 * s1.u.at(n, i) - 0.5 * s2.u.at(n, i)).margin(1e-10));
}

TEST_CASE("compare_direct: single-regime model shows pure Monte Carlo noise") {
  ModelSpec m = testmodels::brownian_1d(0.5);
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.25);
  const BoundaryData phi = right_indicator(1);
  FixedPointSolution sol = fixed_point_solve(m, d, phi, lat, mc(1e-3, 310, 10000));
  DiscrepancyReport rep = compare_direct(sol.u, m, d, phi, mc(1e-3, 311, 10000));
  REQUIRE(rep.max_abs_z < 4.0);
}

TEST_CASE("compare_direct: constant boundary data under Markovian switching") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  const Region d = Region::interval(0.0, 1.0);
  Lattice lat = Lattice::build(d, 0.2);
  const BoundaryData phi = BoundaryData::constant(2, 1.0);
  FixedPointSolution sol = fixed_point_solve(m, d, phi, lat, mc(2e-3, 312, 8000));
  DiscrepancyReport rep = compare_direct(sol.u, m, d, phi, mc(2e-3, 313, 8000));
  REQUIRE(rep.max_abs_z < 4.0);
  for (const auto& nd : rep.nodes) REQUIRE(nd.direct == Approx(1.0).margin(1e-12));
}
