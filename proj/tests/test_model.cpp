#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/models.hpp"
#include "swjd/model.hpp"
#include "swjd/sampler.hpp"
#include "swjd/parallel.hpp"

using namespace swjd;
using Catch::Approx;

TEST_CASE("validate: constant-coefficient model passes A1-A3") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  ValidationReport r = validate_model(m);
  REQUIRE(r.usable);
  REQUIRE(r.find("A1")->status == CheckStatus::kPass);
  REQUIRE(r.find("A2")->status == CheckStatus::kPass);
  REQUIRE(r.find("A3")->status == CheckStatus::kPass);
  REQUIRE(r.find("A4")->status == CheckStatus::kNotDeclared);
}

TEST_CASE("validate: ellipticity failure carries a witness") {
  ModelSpec m;
  m.dim = 2;
  m.regimes = 1;
  m.drift = {VectorField::zero(2)};
  m.diffusion = {MatrixField::constant(SymmetricMatrix(2, {2.0, 0.0, 0.0, 1.0}))};
  m.jumps = {JumpKernel{}};
  m.switching = SwitchingMatrix::none(1);
  m.assumptions.kappa0 = 1.0;  // requires eigenvalues in [1, 1]
  m.finalize();
  ValidationReport r = validate_model(m);
  REQUIRE_FALSE(r.usable);
  REQUIRE(r.find("A2")->status == CheckStatus::kFail);
  REQUIRE(r.find("A2")->witness.has_value());
  REQUIRE(r.find("A2")->witness->value == Approx(2.0));
}

TEST_CASE("negative off-diagonal switching rate is rejected at construction") {
  std::vector<ScalarFieldPtr> rates(4);
  rates[1] = make_constant(-1.0);  // q_12 = -1
  REQUIRE_THROWS_AS(SwitchingMatrix(2, rates, {}), ConfigError);
  try {
    SwitchingMatrix(2, rates, {});
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("q_12") != std::string::npos);
  }
}

TEST_CASE("validate is pure: identical spec gives identical report") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  ValidationReport a = validate_model(m);
  ValidationReport b = validate_model(m);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t k = 0; k < a.checks.size(); ++k) {
    REQUIRE(a.checks[k].status == b.checks[k].status);
    REQUIRE(a.checks[k].detail == b.checks[k].detail);
  }
}

TEST_CASE("ellipticity_bounds: identity, diagonal, singular") {
  auto mk = [](const SymmetricMatrix& a) {
    ModelSpec m;
    m.dim = a.dim();
    m.regimes = 1;
    m.drift = {VectorField::zero(a.dim())};
    m.diffusion = {MatrixField::constant(a)};
    m.jumps = {JumpKernel{}};
    m.switching = SwitchingMatrix::none(1);
    m.assumptions.allow_degenerate = true;
    m.finalize();
    return m;
  };
  std::vector<std::pair<Point, int>> pts = {{Point{0.0, 0.0}, 0}, {Point{1.0, -1.0}, 0}};

  auto [lo1, hi1] = ellipticity_bounds(mk(SymmetricMatrix::identity(2)), pts);
  REQUIRE(lo1 == Approx(1.0));
  REQUIRE(hi1 == Approx(1.0));

  auto [lo2, hi2] = ellipticity_bounds(mk(SymmetricMatrix(2, {2.0, 0.0, 0.0, 0.5})), pts);
  REQUIRE(lo2 == Approx(0.5));
  REQUIRE(hi2 == Approx(2.0));

  auto [lo3, hi3] = ellipticity_bounds(mk(SymmetricMatrix(2, {1.0, 1.0, 1.0, 1.0})), pts);
  REQUIRE(lo3 == Approx(0.0).margin(1e-12));
  REQUIRE(hi3 == Approx(2.0));

  REQUIRE_THROWS_AS(ellipticity_bounds(mk(SymmetricMatrix::identity(2)), {}),
                    std::invalid_argument);
}

TEST_CASE("irreducibility: constant positive rates are strictly irreducible") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  auto rep = irreducibility_check(m, Region::interval(0.0, 1.0), IrreducibilityMode::kStrict);
  REQUIRE(rep.irreducible);
  REQUIRE(rep.paths[0 * 2 + 1] == std::vector<int>{0, 1});
  REQUIRE(rep.paths[1 * 2 + 0] == std::vector<int>{1, 0});
}

TEST_CASE("irreducibility: missing link is reported with the disconnected pair") {
  ModelSpec m = testmodels::two_regime_jump_1d();
  m.switching = SwitchingMatrix::constant_rates(2, {0.0, 0.0, 1.0, 0.0});  // q_12 = 0
  m.finalize();
  auto rep =
      irreducibility_check(m, Region::interval(0.0, 1.0), IrreducibilityMode::kIrreducible);
  REQUIRE_FALSE(rep.irreducible);
  REQUIRE(rep.disconnected_pair.has_value());
  REQUIRE(rep.disconnected_pair->first == 0);
  REQUIRE(rep.disconnected_pair->second == 1);
}

TEST_CASE("irreducibility: 3-state directed cycle connects every pair") {
  ModelSpec m;
  m.dim = 1;
  m.regimes = 3;
  m.drift.assign(3, VectorField::zero(1));
  m.diffusion.assign(3, MatrixField::isotropic(1, 0.5));
  m.jumps.assign(3, JumpKernel{});
  m.switching = SwitchingMatrix::constant_rates(3, {0.0, 1.0, 0.0,   //
                                                    0.0, 0.0, 1.0,   //
                                                    1.0, 0.0, 0.0});
  m.finalize();
  auto rep = irreducibility_check(m, Region::interval(0.0, 1.0), IrreducibilityMode::kStrict);
  REQUIRE(rep.irreducible);
  REQUIRE(rep.paths[0 * 3 + 2] == std::vector<int>{0, 1, 2});
}

TEST_CASE("coefficient families stay within declared bounds on 1e4 samples") {
  // A1 surrogate on the registry families
  LogisticField f(0.25, 0.75, Point{1.0}, 0.3, 0.2);
  RadialBumpField g(0.1, 0.5, Point{0.0}, 0.7);
  AffineClampedField h(0.0, Point{2.0}, -1.0, 1.0);
  CounterRng rng(substream_key(5, 5), 0, RngChannel::kMisc);
  for (int k = 0; k < 10000; ++k) {
    const Point x{(rng.uniform() - 0.5) * 20.0};
    for (const ScalarField* fld : std::initializer_list<const ScalarField*>{&f, &g, &h}) {
      const double v = (*fld)(x);
      REQUIRE(v >= fld->range().first - 1e-12);
      REQUIRE(v <= fld->range().second + 1e-12);
    }
  }
}

TEST_CASE("thinning ratios stay in [0,1] on 1e4 sampled pairs") {
  LogisticStateRatio r1(0.2, 0.9, Point{1.0}, 0.0, 0.5);
  LinearDisplacementRatio r2(0.5, 2.0, Point{1.0});
  CounterRng rng(substream_key(6, 6), 0, RngChannel::kMisc);
  for (int k = 0; k < 10000; ++k) {
    const Point x{(rng.uniform() - 0.5) * 10.0};
    const Point z{(rng.uniform() - 0.5) * 2.0};
    for (const RatioField* r : std::initializer_list<const RatioField*>{&r1, &r2}) {
      const double v = (*r)(x, z);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
}

TEST_CASE("A4 comparability: power-tail kernel passes, uniform kernel fails") {
  ModelSpec m = testmodels::brownian_1d(0.5);
  JumpKernel k;
  k.rate = 1.0;
  k.dominating = std::make_shared<PowerTailDensity>(0.02, 0.5);
  k.ratio = std::make_shared<ConstantRatio>(1.0);
  k.harnack = HarnackComparability{2.0 * std::pow(3.0, 1.5), 0.0};
  m.jumps = {k};
  m.finalize();
  ValidationReport ok = validate_model(m);
  REQUIRE(ok.find("A4")->status == CheckStatus::kPass);

  JumpKernel u;
  u.rate = 1.0;
  u.dominating = std::make_shared<UniformBallDensity>(0.5);
  u.ratio = std::make_shared<ConstantRatio>(1.0);
  u.harnack = HarnackComparability{10.0, 0.0};  // no finite constant works
  m.jumps = {u};
  m.finalize();
  ValidationReport bad = validate_model(m);
  REQUIRE(bad.find("A4")->status == CheckStatus::kFail);
  REQUIRE(bad.usable);  // A4 does not gate usability
}

TEST_CASE("compensated kernels: drift correction restores the martingale") {
  // Dominating uniform [-0.3, 0.3], displacement-tilted acceptance
  // r(z) = clamp(0.5 + 2 z, 0, 1). Accepted jumps have positive mean, so the
  // plain convention drifts right while the compensated one must not.
  auto build = [](JumpConvention conv) {
    ModelSpec m;
    m.dim = 1;
    m.regimes = 1;
    m.drift = {VectorField::zero(1)};
    m.diffusion = {MatrixField::isotropic(1, 0.05)};
    JumpKernel k;
    k.rate = 2.0;
    k.dominating = std::make_shared<UniformBallDensity>(0.3);
    k.ratio = std::make_shared<LinearDisplacementRatio>(0.5, 2.0, Point{1.0});
    k.convention = conv;
    m.jumps = {k};
    m.switching = SwitchingMatrix::none(1);
    m.finalize();
    return m;
  };

  const ModelSpec plain = build(JumpConvention::kPlain);
  const ModelSpec comp = build(JumpConvention::kCompensated);
  // int z clamp(0.5 + 2z, 0, 1) / 0.6 dz: linear part on [-0.25, 0.25], r = 1
  // on [0.25, 0.3], r = 0 on [-0.3, -0.25]
  const double accepted_mean_rate =
      2.0 / 0.6 * (4.0 * 0.25 * 0.25 * 0.25 / 3.0 + 0.5 * (0.3 * 0.3 - 0.25 * 0.25));
  REQUIRE(comp.jumps[0].compensation_drift[0] == Approx(-accepted_mean_rate).margin(1e-4));

  auto mean_at_1 = [&](const ModelSpec& m, std::uint64_t seed) {
    struct Acc {
      double s = 0;
      std::uint64_t n = 0;
      void merge(Acc&& o) { s += o.s, n += o.n; }
    };
    SamplerConfig c;
    c.step = 1e-3;
    c.seed = seed;
    c.t_max = 2.0;
    Acc acc = parallel_reduce_paths<Acc>(40000, 2, [&](std::uint64_t idx, Acc& a) {
      detail::NullSink sink;
      const PathTerminal end = run_path(m, Point{0.0}, 0, StopRule::horizon(1.0), c, idx, sink);
      a.s += end.x[0];
      ++a.n;
    });
    return acc.s / acc.n;
  };

  const double drift_plain = mean_at_1(plain, 404);
  const double drift_comp = mean_at_1(comp, 404);
  const double se = std::sqrt(0.2 / 40000.0);  // generous variance bound
  REQUIRE(std::abs(drift_plain - accepted_mean_rate) < 4.0 * se);
  REQUIRE(std::abs(drift_comp) < 4.0 * se);
}

TEST_CASE("compensated kernels with state-dependent ratios are rejected") {
  JumpKernel k;
  k.rate = 1.0;
  k.dominating = std::make_shared<UniformBallDensity>(0.3);
  k.ratio = std::make_shared<LogisticStateRatio>(0.2, 0.9, Point{1.0}, 0.0, 0.5);
  k.convention = JumpConvention::kCompensated;
  ModelSpec m = testmodels::brownian_1d(0.5);
  m.jumps = {k};
  REQUIRE_THROWS_AS(m.finalize(), std::invalid_argument);
}

TEST_CASE("region: membership, containing ball, intervals") {
  const Region ball = Region::ball(Point{0.5, 0.5}, 0.25);
  REQUIRE(ball.contains(ball.midpoint()));
  const Ball bb = ball.containing_ball();
  CounterRng rng(substream_key(7, 7), 0, RngChannel::kMisc);
  for (int k = 0; k < 1000; ++k) {
    const Point x{rng.uniform() * 2.0 - 0.5, rng.uniform() * 2.0 - 0.5};
    if (ball.contains(x)) REQUIRE(distance(x, bb.center) <= bb.radius + 1e-12);
  }
  const Region box = Region::box(Point{0.0, -1.0}, Point{1.0, 1.0});
  REQUIRE(box.contains(box.midpoint()));
  REQUIRE(box.inradius() == Approx(0.5));
  REQUIRE(Region::interval(-0.3, 0.7).as_interval().first == Approx(-0.3));
  REQUIRE(Region::ball(Point{0.1}, 0.4).as_interval().second == Approx(0.5));
}

TEST_CASE("boundary data: ranges, declared sup, zero detection") {
  BoundaryData c = BoundaryData::constant(2, 1.5);
  REQUIRE(c.declared_sup == 1.5);
  REQUIRE(c.nonnegative());
  REQUIRE_FALSE(c.identically_zero());

  BoundaryData z = BoundaryData::constant(2, 0.0);
  REQUIRE(z.identically_zero());

  BoundaryData mixed = BoundaryData::per_regime(
      {make_constant(0.25),
       std::make_shared<IndicatorField>(IndicatorField::halfspace(Point{1.0}, 1.0))});
  REQUIRE(mixed.declared_sup == 1.0);
  REQUIRE(mixed(Point{2.0}, 1) == 1.0);
  REQUIRE(mixed(Point{2.0}, 0) == 0.25);
}
