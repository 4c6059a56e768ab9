#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace pitchfork;
using testing_support::load_problem;
using testing_support::num;
using testing_support::Rng;

TEST(Index1d, SignPatterns) {
  EXPECT_EQ(index_1d([](double u) { return u; }, 0.0, 0.1).value, 1);
  EXPECT_EQ(index_1d([](double u) { return -3 * u; }, 0.0, 0.1).value, -1);
  EXPECT_EQ(index_1d([](double u) { return u * u; }, 0.0, 0.1).value, 0);
  EXPECT_EQ(index_1d([](double u) { return (u - 1) * (u - 1) * (u - 1); }, 1.0, 0.5).value, 1);
  EXPECT_THROW(index_1d([](double u) { return u * (u - 0.1); }, 0.0, 0.1), NumericError);
}

TEST(IndexNondegenerate, SignOfDeterminant) {
  EXPECT_EQ(index_nondegenerate(Matrix::identity(3)).value, 1);
  Matrix m(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -2;
  EXPECT_EQ(index_nondegenerate(m).value, -1);
  m(1, 1) = 0;
  EXPECT_THROW(index_nondegenerate(m), NumericError);
}

TEST(IndexProduct, ParityOfStableBlock) {
  EXPECT_EQ(index_product(1, 0), 1);
  EXPECT_EQ(index_product(1, 1), -1);
  EXPECT_EQ(index_product(-1, 2), -1);
  EXPECT_EQ(index_product(0, 3), 0);
}

TEST(Winding, ClassicalDegrees) {
  const Vec o{0, 0};
  struct Case {
    std::vector<std::string> eqs;
    int degree;
  };
  const std::vector<Case> cases{
      {{"x", "y"}, 1},
      {{"x", "-y"}, -1},
      {{"x^2 - y^2", "2*x*y"}, 2},
      {{"x^2 - y^2", "-2*x*y"}, -2},
      {{"x^3 - 3*x*y^2", "3*x^2*y - y^3"}, 3},
      {{"1 + x/10", "y/10"}, 0},
  };
  for (const auto& c : cases) {
    const FieldSpec f = make_field({"x", "y"}, "eps", c.eqs);
    EXPECT_EQ(winding_2d(f, o, 0.0, 0.5).value, c.degree) << c.eqs[0];
  }
}

TEST(Winding, OffCenterAndScaled) {
  const FieldSpec f = make_field({"x", "y"}, "eps", {"1000*(x - 2)", "y + 3"});
  EXPECT_EQ(winding_2d(f, Vec{2, -3}, 0.0, 1e-3).value, 1);
  EXPECT_EQ(winding_2d(f, Vec{0, 0}, 0.0, 1.0).value, 0);
}

TEST(Winding, ResolvesNearbyZeroOutsideCircle) {
  // Zeros at 0 and (0.51, 0); the circle of radius 0.5 passes close by.
  const FieldSpec f = make_field({"x", "y"}, "eps", {"x*(x - 0.51) - y^2", "y*(2*x - 0.51)"});
  EXPECT_EQ(winding_2d(f, Vec{0, 0}, 0.0, 0.5).value, index_nondegenerate(jacobian_x(local_jet(f, Vec{0, 0}, 0.0, 1).jet)).value);
}

TEST(Winding, Errors) {
  const FieldSpec f = make_field({"x", "y"}, "eps", {"x - 1", "y"});
  EXPECT_THROW(winding_2d(f, Vec{0, 0}, 0.0, 1.0), NumericError);  // zero on the circle
  EXPECT_THROW(winding_2d(f, Vec{0, 0}, 0.0, 0.5, 16), Error);
  const FieldSpec g = make_field({"x"}, "eps", {"x"});
  EXPECT_THROW(winding_2d(g, Vec{0}, 0.0, 0.5), Error);
}

TEST(Winding, MatchesSignDetForLinearMaps) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix B = rng.well_conditioned(2, 0.2, 5.0);
    const FieldSpec f = make_field({"x", "y"}, "eps",
                                   {"(" + num(B(0, 0)) + ")*x + (" + num(B(0, 1)) + ")*y",
                                    "(" + num(B(1, 0)) + ")*x + (" + num(B(1, 1)) + ")*y"});
    EXPECT_EQ(winding_2d(f, Vec{0, 0}, 0.0, 0.3).value, det(B) > 0 ? 1 : -1);
  }
}

TEST(Perturbation, DegenerateZeros) {
  // x^2 (1 + x): index 0 at the origin.
  const Problem zi = load_problem("zero_index.pf");
  EXPECT_EQ(index_by_perturbation(zi.field, zi.point, 0.0, 0.4).value, 0);
  // x^3: index 1.
  EXPECT_EQ(index_by_perturbation(make_field({"x"}, "eps", {"x^3"}), Vec{0}, 0.0, 0.5).value, 1);
  // Degenerate product in 3D: (x, -y, z^3) has index -1, (x, y, z^2) index 0.
  EXPECT_EQ(index_by_perturbation(make_field({"x", "y", "z"}, "eps", {"x", "-y", "z^3"}), Vec{0, 0, 0}, 0.0, 0.5).value, -1);
  EXPECT_EQ(index_by_perturbation(make_field({"x", "y", "z"}, "eps", {"x", "y", "z^2"}), Vec{0, 0, 0}, 0.0, 0.5).value, 0);
}

TEST(Perturbation, SymmetricPitchforkOrigin) {
  const Problem p = load_problem("pitchfork_symmetric.pf");
  EXPECT_EQ(index_by_perturbation(p.field, p.point, 0.0, 0.3).value, 1);
  EXPECT_EQ(winding_2d(p.field, p.point, 0.0, 0.3).value, 1);
}

TEST(Perturbation, BoundaryZeroThrows) {
  const FieldSpec f = make_field({"x"}, "eps", {"x - 0.5"});
  EXPECT_THROW(index_by_perturbation(f, Vec{0}, 0.0, 0.5), NumericError);
}

TEST(BallIndexSum, ConstantAcrossTheFork) {
  const Problem p = load_problem("pitchfork_symmetric.pf");
  for (double e : {-0.05, 0.0, 0.02, 0.05}) {
    const auto zeros = find_zeros_in_ball(p.field, p.point, 0.8, e);
    EXPECT_EQ(ball_index_sum(p.field, zeros, p.point, e, 0.8), 1) << "eps = " << e;
  }
}
