#include <cmath>

#include <gtest/gtest.h>

#include "it2lss/bench_pendulum.hpp"
#include "it2lss/fou_partition.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "support.hpp"

namespace it2lss {
namespace {

using testing::Rng;

MembershipFn flat(double g) { return MembershipFn::tabulated({-10.0, 10.0}, {g, g}); }

IT2Set flat_set(double lo, double hi) { return IT2Set(flat(lo), flat(hi)); }

Subsystem scalar_subsystem(std::vector<std::vector<Antecedent>> ants,
                           Realization alpha = constant_realization()) {
  std::vector<PlantRule> rules;
  for (auto& a : ants) {
    PlantRule r;
    r.A = Matrix::Zero(1, 1);
    r.B = Matrix::Zero(1, 1);
    r.D1 = Matrix::Zero(1, 1);
    r.C = Matrix::Zero(1, 1);
    r.D2 = Matrix::Zero(1, 1);
    r.antecedents = std::move(a);
    rules.push_back(std::move(r));
  }
  return Subsystem(0, 1, 1, 1, 1, std::move(rules), std::move(alpha));
}

Vector scalar(double v) { return Vector::Constant(1, v); }

// ---------------------------------------------------------------------------
// Membership functions

TEST(MembershipFn, TriangularShape) {
  const auto f = MembershipFn::triangular(-1.0, 0.0, 2.0, 0.5);
  EXPECT_DOUBLE_EQ(f(0.0), 0.5);
  EXPECT_DOUBLE_EQ(f(1.0), 0.25);
  EXPECT_DOUBLE_EQ(f(-0.5), 0.25);
  EXPECT_DOUBLE_EQ(f(3.0), 0.0);
}

TEST(MembershipFn, TrapezoidAndGaussian) {
  const auto t = MembershipFn::trapezoidal(0.0, 1.0, 2.0, 4.0);
  EXPECT_DOUBLE_EQ(t(1.5), 1.0);
  EXPECT_DOUBLE_EQ(t(3.0), 0.5);
  const auto g = MembershipFn::gaussian(1.0, 2.0);
  EXPECT_NEAR(g(3.0), std::exp(-0.5), 1e-15);
}

TEST(MembershipFn, TabulatedIsConstantBeyondEnds) {
  const auto f = MembershipFn::tabulated({-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(f(-5.0), 1.0);
  EXPECT_DOUBLE_EQ(f(0.25), 0.25);
  EXPECT_DOUBLE_EQ(f(7.0), 1.0);
}

TEST(MembershipFn, RejectsBadParameters) {
  EXPECT_THROW(MembershipFn::triangular(1.0, 0.0, 2.0), InputError);
  EXPECT_THROW(MembershipFn::gaussian(0.0, 0.0), InputError);
  EXPECT_THROW(MembershipFn::tabulated({0.0, 0.0}, {0.1, 0.2}), InputError);
  EXPECT_THROW(MembershipFn::tabulated({0.0, 1.0}, {0.1, 1.2}), InputError);
  EXPECT_THROW(MembershipFn::triangular(0.0, 1.0, 2.0, 0.0), InputError);
}

TEST(MembershipFn, GradesStayInUnitInterval) {
  Rng rng(7);
  const auto f = MembershipFn::gaussian(0.0, 0.3, 0.9);
  for (int k = 0; k < 1000; ++k) {
    const double v = f(rng.uniform(-5.0, 5.0));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(IT2Set, RejectsLowerAboveUpper) {
  EXPECT_THROW(IT2Set(flat(0.6), flat(0.5)), InputError);
  EXPECT_NO_THROW(IT2Set(flat(0.5), flat(0.5)));
}

// ---------------------------------------------------------------------------
// Grades

TEST(FiringBounds, SingleAntecedentReturnsBothGrades) {
  const auto lower = MembershipFn::triangular(-1.0, 0.2, 1.0, 0.7);
  const auto upper = MembershipFn::triangular(-1.0, 0.2, 1.0);
  const auto sub = scalar_subsystem({{Antecedent{0, IT2Set(lower, upper)}}});
  const auto fb = firing_bounds(sub, 0, scalar(0.2));
  EXPECT_DOUBLE_EQ(fb.lower, lower(0.2));
  EXPECT_DOUBLE_EQ(fb.upper, upper(0.2));
}

TEST(FiringBounds, ZeroGradesGiveZeroBounds) {
  const auto sub = scalar_subsystem({{Antecedent{0, IT2Set(MembershipFn::triangular(0, 1, 2, 0.5),
                                                           MembershipFn::triangular(0, 1, 2))}}});
  const auto fb = firing_bounds(sub, 0, scalar(5.0));
  EXPECT_EQ(fb.lower, 0.0);
  EXPECT_EQ(fb.upper, 0.0);
}

TEST(FiringBounds, ProductOverAntecedents) {
  std::vector<PlantRule> rules(1);
  rules[0].A = Matrix::Zero(2, 2);
  rules[0].B = Matrix::Zero(2, 1);
  rules[0].D1 = Matrix::Zero(2, 1);
  rules[0].C = Matrix::Zero(1, 2);
  rules[0].D2 = Matrix::Zero(1, 1);
  rules[0].antecedents = {{0, flat_set(0.5, 0.6)}, {1, flat_set(0.4, 0.5)}};
  const Subsystem sub(0, 2, 1, 1, 1, rules);
  const auto fb = firing_bounds(sub, 0, Vector::Zero(2));
  EXPECT_NEAR(fb.lower, 0.20, 1e-15);
  EXPECT_NEAR(fb.upper, 0.30, 1e-15);
}

TEST(FiringBounds, DimensionMismatchIsInputError) {
  const auto sub = scalar_subsystem({{Antecedent{0, flat_set(0.5, 0.6)}}});
  EXPECT_THROW(firing_bounds(sub, 0, Vector::Zero(2)), InputError);
  EXPECT_THROW(firing_bounds(sub, 3, scalar(0.0)), InputError);
}

TEST(PlantGrades, SingleRuleIsOne) {
  const auto sub = scalar_subsystem({{Antecedent{0, flat_set(0.1, 0.3)}}});
  const Vector w = plant_grades(sub, scalar(0.4));
  ASSERT_EQ(w.size(), 1);
  EXPECT_DOUBLE_EQ(w(0), 1.0);
}

TEST(PlantGrades, TypeOneCollapseNormalizes) {
  const auto sub = scalar_subsystem(
      {{Antecedent{0, flat_set(0.2, 0.2)}}, {Antecedent{0, flat_set(0.6, 0.6)}}});
  const Vector w = plant_grades(sub, scalar(0.0));
  EXPECT_NEAR(w(0), 0.25, 1e-15);
  EXPECT_NEAR(w(1), 0.75, 1e-15);
}

TEST(PlantGrades, EmbeddedGradesFromAlphaBlend) {
  // α̲ = 0.25 blends the bounds into 0.2 and 0.6.
  const auto sub = scalar_subsystem(
      {{Antecedent{0, flat_set(0.08, 0.24)}}, {Antecedent{0, flat_set(0.48, 0.64)}}},
      constant_realization(0.25));
  const Vector w = plant_grades(sub, scalar(0.0));
  EXPECT_NEAR(w(0), 0.25, 1e-14);
  EXPECT_NEAR(w(1), 0.75, 1e-14);
}

TEST(PlantGrades, AllZeroIsDegenerate) {
  const auto sub = scalar_subsystem(
      {{Antecedent{0, IT2Set(MembershipFn::triangular(0, 1, 2, 0.5), MembershipFn::triangular(0, 1, 2))}}});
  EXPECT_THROW(plant_grades(sub, scalar(-3.0)), DegenerateInputError);
}

TEST(PlantGrades, RealizationMustSumToOne) {
  const auto bad = [](const Vector&, std::size_t) { return TypeReduction{0.7, 0.7}; };
  const auto sub = scalar_subsystem({{Antecedent{0, flat_set(0.1, 0.3)}}}, bad);
  EXPECT_THROW(plant_grades(sub, scalar(0.0)), InputError);
}

TEST(ControllerGrades, SingleRuleIsOne) {
  ControllerRuleBase rb({ControllerRule{{Antecedent{0, flat_set(0.1, 0.2)}}}});
  EXPECT_DOUBLE_EQ(controller_grades(rb, scalar(0.0))(0), 1.0);
}

TEST(ControllerGrades, BetaLowerOneUsesLowerGradesOnly) {
  ControllerRuleBase rb({ControllerRule{{Antecedent{0, flat_set(0.1, 0.9)}}},
                         ControllerRule{{Antecedent{0, flat_set(0.3, 0.4)}}}},
                        constant_realization(1.0));
  const Vector m = controller_grades(rb, scalar(0.0));
  EXPECT_NEAR(m(0), 0.25, 1e-15);
  EXPECT_NEAR(m(1), 0.75, 1e-15);
}

TEST(ControllerGrades, SymmetricPointGivesEqualGrades) {
  const auto left = IT2Set(MembershipFn::triangular(-2, -1, 1, 0.8), MembershipFn::triangular(-2, -1, 1));
  const auto right = IT2Set(MembershipFn::triangular(-1, 1, 2, 0.8), MembershipFn::triangular(-1, 1, 2));
  ControllerRuleBase rb({ControllerRule{{Antecedent{0, left}}}, ControllerRule{{Antecedent{0, right}}}});
  const Vector m = controller_grades(rb, scalar(0.0));
  EXPECT_NEAR(m(0), 0.5, 1e-15);
  EXPECT_NEAR(m(1), 0.5, 1e-15);
}

LargeScaleSystem one_subsystem(Subsystem sub, ControllerRuleBase rb) {
  return LargeScaleSystem({std::move(sub)}, {std::move(rb)});
}

TEST(CombinedGrades, SingleRulesGiveOne) {
  auto sys = one_subsystem(scalar_subsystem({{Antecedent{0, flat_set(0.1, 0.3)}}}),
                           ControllerRuleBase({ControllerRule{{}}}));
  const Matrix h = combined_grades(sys, 0, scalar(0.0));
  ASSERT_EQ(h.rows(), 1);
  ASSERT_EQ(h.cols(), 1);
  EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
}

TEST(CombinedGrades, OuterProduct) {
  auto sys = one_subsystem(
      scalar_subsystem({{Antecedent{0, flat_set(0.3, 0.3)}}, {Antecedent{0, flat_set(0.7, 0.7)}}}),
      ControllerRuleBase({ControllerRule{{Antecedent{0, flat_set(0.4, 0.4)}}},
                          ControllerRule{{Antecedent{0, flat_set(0.6, 0.6)}}}}));
  const Matrix h = combined_grades(sys, 0, scalar(0.0));
  Matrix expect(2, 2);
  expect << 0.12, 0.18, 0.28, 0.42;
  EXPECT_LT((h - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CombinedGrades, RandomStatesNormalized) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sys = testing::random_system(rng);
    for (int k = 0; k < 50; ++k) {
      const Vector x = rng.vector(2);
      for (std::size_t i = 0; i < sys.size(); ++i) {
        const Matrix h = combined_grades(sys, i, x);
        EXPECT_NEAR(h.sum(), 1.0, 1e-12);
        EXPECT_GE(h.minCoeff(), 0.0);
        EXPECT_LE(h.maxCoeff(), 1.0);
        EXPECT_NEAR(controller_grades(sys.controller(i), x).sum(), 1.0, 1e-12);
      }
    }
  }
}

TEST(LargeScaleSystem, ImperfectPremiseMatchingAllowed) {
  Rng rng(3);
  testing::RandomShape shape;
  shape.p = 2;
  shape.c = 3;
  const auto sys = testing::random_system(rng, shape);
  EXPECT_EQ(sys.controller(0).c(), 3U);
  EXPECT_EQ(combined_grades(sys, 1, rng.vector(2)).cols(), 3);
}

TEST(LargeScaleSystem, ValidatesStructure) {
  Rng rng(5);
  auto sys = testing::random_system(rng);
  auto rules = sys.subsystem(0).rules();
  rules[0].interconnections[7] = Matrix::Zero(2, 2);
  EXPECT_THROW(LargeScaleSystem({Subsystem(0, 2, 1, 1, 1, rules), sys.subsystem(1)},
                                sys.controllers()),
               InputError);
  rules = sys.subsystem(0).rules();
  rules[0].interconnections[0] = Matrix::Zero(2, 2);
  EXPECT_THROW(Subsystem(0, 2, 1, 1, 1, rules), InputError);
  rules = sys.subsystem(0).rules();
  rules[1].B = Matrix::Zero(3, 1);
  EXPECT_THROW(Subsystem(0, 2, 1, 1, 1, rules), InputError);
  EXPECT_THROW(LargeScaleSystem({sys.subsystem(0)}, sys.controllers()), InputError);
}

// ---------------------------------------------------------------------------
// Partition

StateBox square(double half, std::size_t cells) {
  StateBox b;
  b.lower = {-half, -half};
  b.upper = {half, half};
  b.cells_per_dim = {cells, cells};
  return b;
}

TEST(Partition, SingleRulesGiveUnitDeltas) {
  Rng rng(2);
  testing::RandomShape shape;
  shape.p = 1;
  shape.c = 1;
  const auto sys = testing::random_system(rng, shape);
  const auto part = build_partition(sys, square(1.0, 3));
  const auto& sp = part.at(0);
  for (std::size_t k = 0; k < sp.q(); ++k) {
    for (std::size_t corner = 0; corner < sp.corners(); ++corner) {
      EXPECT_NEAR(sp.delta_lower(0, 0, corner, k, 0), 1.0, 1e-8);
      EXPECT_DOUBLE_EQ(sp.delta_upper(0, 0, corner, k, 0), 1.0);
    }
  }
}

TEST(Partition, EnvelopeHoldsOnDenseResampling) {
  Rng rng(21);
  const auto sys = testing::random_system(rng);
  const auto part = build_partition(sys, square(1.0, 4));
  // Independent oracle: direct grade evaluation on a grid ten times finer.
  const auto& box = part.at(0).box();
  const std::size_t per_dim = 4 * 7 * 10 + 1;
  double worst = 1.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t a = 0; a < per_dim; ++a) {
      for (std::size_t b = 0; b < per_dim; b += 7) {
        Vector x(2);
        x << box.lower[0] + 2.0 * a / (per_dim - 1), box.lower[1] + 2.0 * b / (per_dim - 1);
        const Matrix h = combined_grades(sys, i, x);
        for (Index l = 0; l < 2; ++l) {
          for (Index j = 0; j < 2; ++j) {
            const auto gb = reconstruct_bounds(part, i, x, l, j, 0);
            worst = std::min({worst, h(l, j) - gb.lower, gb.upper - h(l, j)});
          }
        }
      }
    }
  }
  EXPECT_GE(worst, -1e-8);
  EXPECT_GE(audit_envelope(sys, part, 10).min_margin, -1e-8);
}

TEST(Partition, RefinementNeverWidensEnvelope) {
  const pendulum::PendulumParams pp;
  const auto sys = pendulum::build_system(pp);
  const auto coarse = build_partition(sys, pendulum::operating_box(pp, 2));
  const auto fine = build_partition(sys, pendulum::operating_box(pp, 8));
  Rng rng(4);
  for (int k = 0; k < 500; ++k) {
    Vector x(2);
    x << rng.uniform(-pp.r_rad(), pp.r_rad()), rng.uniform(-10.0, 10.0);
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t j = 0; j < 2; ++j) {
        const auto c = reconstruct_bounds(coarse, 0, x, l, j, 0);
        const auto f = reconstruct_bounds(fine, 0, x, l, j, 0);
        EXPECT_LE(f.upper - f.lower, c.upper - c.lower + 1e-12);
      }
    }
  }
}

TEST(Partition, MoreBandsNarrowEachBand) {
  const pendulum::PendulumParams pp;
  const auto sys = pendulum::build_system(pp);
  PartitionOptions o;
  o.tau = 2;
  const auto p0 = build_partition(sys, pendulum::operating_box(pp, 4));
  const auto p2 = build_partition(sys, pendulum::operating_box(pp, 4), o);
  const auto& a = p0.at(1);
  const auto& b = p2.at(1);
  ASSERT_EQ(b.bands(), 3U);
  for (std::size_t k = 0; k < a.q(); ++k) {
    const double w0 = a.delta_upper(0, 1, 0, k, 0) - a.delta_lower(0, 1, 0, k, 0);
    for (std::size_t z = 0; z < 3; ++z) {
      EXPECT_LE(b.delta_upper(0, 1, 0, k, z) - b.delta_lower(0, 1, 0, k, z), w0 + 1e-12);
    }
  }
  EXPECT_GE(audit_envelope(sys, p2, 3).min_margin, -1e-8);
}

TEST(Partition, DegenerateCellNamesTheCell) {
  std::vector<PlantRule> rules(1);
  rules[0].A = Matrix::Zero(1, 1);
  rules[0].B = Matrix::Zero(1, 1);
  rules[0].D1 = Matrix::Zero(1, 1);
  rules[0].C = Matrix::Zero(1, 1);
  rules[0].D2 = Matrix::Zero(1, 1);
  rules[0].antecedents = {{0, IT2Set(MembershipFn::triangular(0, 1, 2, 0.5),
                                     MembershipFn::triangular(0, 1, 2))}};
  const LargeScaleSystem sys({Subsystem(0, 1, 1, 1, 1, rules)},
                             {ControllerRuleBase({ControllerRule{{}}})});
  StateBox box;
  box.lower = {-3.0};
  box.upper = {1.0};
  box.cells_per_dim = {4};
  try {
    build_partition(sys, box);
    FAIL() << "expected a partition error";
  } catch (const PartitionError& e) {
    EXPECT_NE(std::string(e.what()).find("cell 0"), std::string::npos);
  }
}

TEST(Partition, RejectsSparseSampling) {
  Rng rng(2);
  const auto sys = testing::random_system(rng);
  PartitionOptions o;
  o.samples_per_cell = 4;
  EXPECT_THROW(build_partition(sys, square(1.0, 2), o), InputError);
}

TEST(InterpWeights, CornerAndCenter) {
  Rng rng(1);
  const auto sys = testing::random_system(rng);
  const auto part = build_partition(sys, square(1.0, 2));
  Vector corner(2);
  corner << 0.0, -1.0;
  const auto wc = interp_weights(part, 0, corner);
  int ones = 0;
  for (double v : wc.corner_weights()) {
    EXPECT_TRUE(v == 0.0 || v == 1.0);
    ones += v == 1.0;
  }
  EXPECT_EQ(ones, 1);

  Vector center(2);
  center << 0.5, 0.5;
  for (double v : interp_weights(part, 0, center).corner_weights()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(InterpWeights, PartitionOfUnity) {
  Rng rng(8);
  const auto sys = testing::random_system(rng);
  const auto part = build_partition(sys, square(1.0, 5));
  for (int k = 0; k < 1000; ++k) {
    const auto w = interp_weights(part, 1, rng.vector(2));
    double s = 0.0;
    for (double v : w.corner_weights()) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (const auto& pair : w.v) EXPECT_NEAR(pair[0] + pair[1], 1.0, 1e-15);
  }
}

TEST(InterpWeights, OutsideBoxIsExtrapolationError) {
  Rng rng(8);
  const auto sys = testing::random_system(rng);
  const auto part = build_partition(sys, square(1.0, 2));
  Vector x(2);
  x << 1.5, 0.0;
  EXPECT_THROW(interp_weights(part, 0, x), ExtrapolationError);
  EXPECT_THROW(reconstruct_bounds(part, 0, x, 0, 0, 0), ExtrapolationError);
}

TEST(ReconstructBounds, CornerReturnsTableEntries) {
  const pendulum::PendulumParams pp;
  const auto sys = pendulum::build_system(pp);
  const auto part = build_partition(sys, pendulum::operating_box(pp, 4));
  const auto& sp = part.at(0);
  const std::size_t cell = 5;
  for (std::size_t corner = 0; corner < 4; ++corner) {
    // Interior side of the corner so the containing cell is `cell`.
    Vector x = sp.corner_point(cell, corner);
    const auto b = reconstruct_bounds(part, 0, x, 1, 0, 0);
    const auto w = interp_weights(sp, x);
    double lo = 0.0, hi = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      lo += w.corner_weight(c) * sp.delta_lower(1, 0, c, w.cell, 0);
      hi += w.corner_weight(c) * sp.delta_upper(1, 0, c, w.cell, 0);
    }
    EXPECT_DOUBLE_EQ(b.lower, lo);
    EXPECT_DOUBLE_EQ(b.upper, hi);
    EXPECT_LE(b.lower, b.upper);
  }
}

TEST(ReconstructBounds, ConstantGradeGivesTightBounds) {
  Rng rng(6);
  testing::RandomShape shape;
  shape.p = 1;
  shape.c = 1;
  const auto sys = testing::random_system(rng, shape);
  const auto part = build_partition(sys, square(1.0, 2));
  const auto b = reconstruct_bounds(part, 0, rng.vector(2, 0.9), 0, 0, 0);
  EXPECT_NEAR(b.lower, 1.0, 1e-8);
  EXPECT_NEAR(b.upper, 1.0, 1e-8);
}

// ---------------------------------------------------------------------------
// Pendulum benchmark model

TEST(Pendulum, MatricesMatchBenchmark) {
  const auto sys = pendulum::build_system();
  ASSERT_EQ(sys.size(), 2U);
  const double a21[2][2] = {{8.81, 5.38}, {9.01, 5.58}};
  const double abar[2] = {0.25, 0.20};
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(sys.subsystem(i).p(), 2U);
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& r = sys.subsystem(i).rule(l);
      Matrix a(2, 2);
      a << 0, 1, a21[i][l], 0;
      Matrix b(2, 1);
      b << 0, 0.5;
      Matrix c(1, 2);
      c << 1, 1;
      EXPECT_EQ(r.A, a);
      EXPECT_EQ(r.B, b);
      EXPECT_EQ(r.D1, b);
      EXPECT_EQ(r.C, c);
      EXPECT_EQ(r.D2, Matrix::Zero(1, 1));
      Matrix ic = Matrix::Zero(2, 2);
      ic(1, 0) = abar[i];
      EXPECT_EQ(r.interconnections.at(1 - i), ic);
    }
  }
}

TEST(Pendulum, RuleEigenvaluesFromCharacteristicPolynomial) {
  const auto sys = pendulum::build_system();
  // λ² = a21 for A = [[0,1],[a21,0]].
  auto check = [](const Matrix& a, double a21) {
    Eigen::EigenSolver<Matrix> es(a);
    std::vector<double> re;
    for (Index k = 0; k < 2; ++k) {
      EXPECT_NEAR(es.eigenvalues()(k).imag(), 0.0, 1e-12);
      re.push_back(es.eigenvalues()(k).real());
    }
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -std::sqrt(a21), 1e-12);
    EXPECT_NEAR(re[1], std::sqrt(a21), 1e-12);
  };
  check(sys.subsystem(0).rule(0).A, 8.81);
  check(sys.subsystem(1).rule(0).A, 9.01);
  EXPECT_NEAR(std::sqrt(8.81), 2.9682, 1e-4);
  EXPECT_NEAR(std::sqrt(9.01), 3.0017, 1e-4);
}

TEST(Pendulum, MembershipAnchors) {
  const pendulum::PendulumParams pp;
  const auto sets = pendulum::default_membership(pp);
  const double r = pp.r_rad();
  EXPECT_DOUBLE_EQ(sets.near_zero.upper()(0.0), 1.0);
  EXPECT_DOUBLE_EQ(sets.near_edge.lower()(0.0), 0.0);
  for (double x : {-r, r}) {
    EXPECT_DOUBLE_EQ(sets.near_edge.upper()(x), 1.0);
    EXPECT_DOUBLE_EQ(sets.near_zero.lower()(x), 0.0);
  }
  const double mid = 0.4 * r;
  for (const auto* s : {&sets.near_zero, &sets.near_edge}) {
    EXPECT_GT(s->lower()(mid), 0.0);
    EXPECT_LT(s->upper()(mid), 1.0);
    EXPECT_GT(s->upper()(mid) - s->lower()(mid), 0.0);
  }
  Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-r, r);
    EXPECT_LE(sets.near_zero.lower()(x), sets.near_zero.upper()(x));
    EXPECT_LE(sets.near_edge.lower()(x), sets.near_edge.upper()(x));
    EXPECT_GE(sets.near_zero.upper()(x) + sets.near_edge.upper()(x), 1.0 - 1e-12);
    EXPECT_LE(sets.near_zero.lower()(x) + sets.near_edge.lower()(x), 2.0);
  }
}

TEST(Pendulum, ParameterValidation) {
  pendulum::PendulumParams pp;
  pp.m1 = -1.0;
  EXPECT_THROW(pp.validate(), InputError);
  pp = {};
  pp.fou_height = 1.5;
  EXPECT_THROW(pendulum::build_system(pp), InputError);
}

}  // namespace
}  // namespace it2lss
