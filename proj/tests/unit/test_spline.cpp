#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pws/spline.hpp"

using namespace pws;

namespace {

// Independent construction of the not-a-knot interpolant: solve for all
// 4(k-1) local polynomial coefficients at once from interpolation, C1/C2
// continuity and third-derivative continuity at t_1 and t_{k-2}.
struct DenseNotAKnot {
  std::vector<double> knots;
  Eigen::VectorXd coef;  // segment s: coef[4s + p] multiplies (x - t_s)^p

  DenseNotAKnot(std::vector<double> t, const std::vector<double>& y) : knots(std::move(t)) {
    const int k = static_cast<int>(knots.size());
    const int n = 4 * (k - 1);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    int row = 0;
    auto value_row = [&](int s, double u) {
      for (int p = 0; p < 4; ++p) m(row, 4 * s + p) = std::pow(u, p);
    };
    for (int s = 0; s < k - 1; ++s) {
      const double h = knots[s + 1] - knots[s];
      value_row(s, 0.0);
      rhs(row++) = y[s];
      value_row(s, h);
      rhs(row++) = y[s + 1];
    }
    for (int s = 0; s + 1 < k - 1; ++s) {
      const double h = knots[s + 1] - knots[s];
      // first derivative
      m(row, 4 * s + 1) = 1.0;
      m(row, 4 * s + 2) = 2.0 * h;
      m(row, 4 * s + 3) = 3.0 * h * h;
      m(row, 4 * (s + 1) + 1) = -1.0;
      ++row;
      // second derivative
      m(row, 4 * s + 2) = 2.0;
      m(row, 4 * s + 3) = 6.0 * h;
      m(row, 4 * (s + 1) + 2) = -2.0;
      ++row;
    }
    m(row, 3) = 1.0;
    m(row, 7) = -1.0;
    ++row;
    m(row, 4 * (k - 3) + 3) = 1.0;
    m(row, 4 * (k - 2) + 3) = -1.0;
    ++row;
    REQUIRE(row == n);
    coef = m.fullPivLu().solve(rhs);
  }

  double operator()(double x) const {
    std::size_t s = 0;
    while (s + 2 < knots.size() && x > knots[s + 1]) ++s;
    const double u = x - knots[s];
    double v = 0.0;
    for (int p = 3; p >= 0; --p) v = v * u + coef(4 * static_cast<int>(s) + p);
    return v;
  }
};

std::vector<double> random_in(double a, double b, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(a, b);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

}  // namespace

TEST_CASE("knot grid construction") {
  KnotGrid1D g(-3, 3, 1.5);
  CHECK(g.size() == 5);
  const std::vector<double> expect{-3, -1.5, 0, 1.5, 3};
  for (std::size_t j = 0; j < 5; ++j) CHECK(g.knot(j) == doctest::Approx(expect[j]).epsilon(1e-15));

  KnotGrid1D g2(-2, 2, 2);
  CHECK(g2.size() == 3);
  CHECK(g2.knot(1) == 0.0);

  KnotGrid1D g3(0, 1, 1);
  CHECK(g3.size() == 2);

  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    CHECK(std::abs(g.knot(j + 1) - g.knot(j) - 1.5) < 1e-12 * 1.5);
  }

  CHECK_THROWS_AS(KnotGrid1D(0, 1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(KnotGrid1D(1, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KnotGrid1D(0, 1, -1), std::invalid_argument);
  try {
    KnotGrid1D(0, 1, 0.3);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("cardinal basis interpolates unit vectors") {
  for (double delta : {0.5, 1.0, 1.5, 2.0, 3.0, 6.0}) {
    KnotGrid1D g(-3, 3, delta);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(std::abs(g.basis(j, g.knot(i)) - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("cardinal basis is a partition of unity") {
  for (double delta : {1.0, 1.5, 2.0, 3.0}) {
    KnotGrid1D g(-3, 3, delta);
    std::vector<double> b(g.size());
    for (double x : random_in(-3, 3, 100, 7)) {
      g.basis_values(x, b);
      double sum = 0.0;
      for (double v : b) sum += v;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("cardinal basis matches a dense not-a-knot solve off the knots") {
  for (double delta : {1.5, 1.0, 0.75}) {
    KnotGrid1D g(-3, 3, delta);
    const auto xs = random_in(-3, 3, 20, 11);
    for (std::size_t j = 0; j < g.size(); ++j) {
      std::vector<double> unit(g.size(), 0.0);
      unit[j] = 1.0;
      DenseNotAKnot oracle(g.knots(), unit);
      for (double x : xs) CHECK(std::abs(g.basis(j, x) - oracle(x)) < 1e-12);
    }
  }
}

TEST_CASE("degenerate grids use Lagrange interpolation") {
  KnotGrid1D lin(0, 1, 1);
  CHECK(lin.basis(0, 0.25) == doctest::Approx(0.75));
  CHECK(lin.basis(1, 0.25) == doctest::Approx(0.25));

  KnotGrid1D quad(-2, 2, 2);
  // x^2 has knot values 4, 0, 4 and is reproduced exactly.
  Spline1D s(quad, {4, 0, 4});
  for (double x : random_in(-2, 2, 20, 3)) CHECK(s(x) == doctest::Approx(x * x).epsilon(1e-13));
}

TEST_CASE("spline evaluation") {
  KnotGrid1D g(-3, 3, 1.5);
  Spline1D ones(g, std::vector<double>(5, 1.0));
  for (double x : random_in(-3, 3, 30, 5)) CHECK(ones(x) == doctest::Approx(1.0).epsilon(1e-13));

  Spline1D e2(g, {0, 1, 0, 0, 0});
  CHECK(e2(g.knot(1)) == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> cube;
  for (double t : g.knots()) cube.push_back(t * t * t);
  Spline1D s(g, cube);
  for (double x : random_in(-3, 3, 50, 9)) CHECK(std::abs(s(x) - x * x * x) < 1e-9);

  CHECK_THROWS_AS(s(3.5), DomainError);
  CHECK_THROWS_AS(s(-3.01), DomainError);
  CHECK_THROWS_AS(g.basis(0, 4.0), DomainError);
  CHECK_THROWS_AS(Spline1D(g, {1, 2}), std::invalid_argument);
}

TEST_CASE("polynomial reproduction in 1D for k >= 4") {
  for (double delta : {0.5, 1.0, 1.5, 2.0}) {
    KnotGrid1D g(-3, 3, delta);
    for (int p = 0; p <= 3; ++p) {
      std::vector<double> c;
      for (double t : g.knots()) c.push_back(std::pow(t, p));
      Spline1D s(g, c);
      for (double x : random_in(-3, 3, 40, 21 + p)) CHECK(std::abs(s(x) - std::pow(x, p)) < 1e-8);
    }
  }
}

TEST_CASE("tensor-product spline reproduces bicubic monomials") {
  const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 2.0);
  const auto xs = random_in(-3, 3, 50, 1);
  const auto ys = random_in(-3, 3, 50, 2);
  for (int p = 0; p <= 3; ++p) {
    for (int q = 0; q <= 3; ++q) {
      Eigen::MatrixXd c(4, 4);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) c(i, j) = std::pow(grid.x.knot(i), p) * std::pow(grid.y.knot(j), q);
      }
      Spline2D s(grid, c);
      for (int r = 0; r < 50; ++r) {
        CHECK(std::abs(s(xs[r], ys[r]) - std::pow(xs[r], p) * std::pow(ys[r], q)) < 1e-8);
      }
    }
  }

  Spline2D zero(grid, Eigen::MatrixXd::Zero(4, 4));
  CHECK(zero(0.3, -1.2) == 0.0);

  const auto fine = make_knot_grid_2d({-3, 3, -3, 3}, 1.0);
  Eigen::MatrixXd c = Eigen::MatrixXd::Random(7, 7);
  Spline2D s(fine, c);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) CHECK(std::abs(s(fine.x.knot(i), fine.y.knot(j)) - c(i, j)) < 1e-10);
  }
  CHECK_THROWS_AS(s(3.2, 0.0), DomainError);
  CHECK_THROWS_AS(s(0.0, -3.2), DomainError);
}

TEST_CASE("spline evaluation is linear in the coefficients") {
  KnotGrid1D g(-3, 3, 1.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> c1(g.size()), c2(g.size()), mix(g.size());
    const double a = n(rng), b = n(rng);
    for (std::size_t j = 0; j < g.size(); ++j) {
      c1[j] = n(rng);
      c2[j] = n(rng);
      mix[j] = a * c1[j] + b * c2[j];
    }
    Spline1D s1(g, c1), s2(g, c2), sm(g, mix);
    for (double x : random_in(-3, 3, 20, trial)) {
      CHECK(std::abs(sm(x) - (a * s1(x) + b * s2(x))) < 1e-12);
    }
  }
}

TEST_CASE("splines are C2 across knots") {
  KnotGrid1D g(-3, 3, 1.0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  std::vector<double> c(g.size());
  for (auto& v : c) v = n(rng);
  Spline1D s(g, c);
  const double step = 1e-4;
  auto d2 = [&](double c) { return (s(c + step) - 2 * s(c) + s(c - step)) / (step * step); };
  for (std::size_t j = 1; j + 1 < g.size(); ++j) {
    const double t = g.knot(j);
    // Each piece is cubic, so linear extrapolation of one-sided second
    // differences recovers s''(t-) and s''(t+) up to rounding.
    const double left = 2 * d2(t - step) - d2(t - 2 * step);
    const double right = 2 * d2(t + step) - d2(t + 2 * step);
    CHECK(std::abs(left - right) < 1e-6);
  }
}

TEST_CASE("least-squares fits") {
  KnotGrid1D g(-3, 3, 1.5);
  std::vector<double> xs;
  for (int i = 0; i <= 300; ++i) xs.push_back(-3.0 + 0.02 * i);
  xs.back() = 3.0;

  SUBCASE("recovers a spline in the space") {
    const std::vector<double> c{0.3, -1.2, 2.0, 0.7, -0.4};
    Spline1D truth(g, c);
    std::vector<double> f;
    for (double x : xs) f.push_back(truth(x));
    const auto fit = fit_spline_lsq(SampleSet::univariate(xs, f), g);
    CHECK(fit.well_posed);
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(std::abs(fit.spline.coeffs()[j] - c[j]) < 1e-9);
  }

  SUBCASE("reproduces cubic data") {
    std::vector<double> f;
    for (double x : xs) f.push_back(x * x * x - 2 * x + 1);
    const auto fit = fit_spline_lsq(SampleSet::univariate(xs, f), g);
    double sup = 0.0;
    for (int i = 0; i <= 1200; ++i) {
      const double x = -3.0 + 0.005 * i;
      sup = std::max(sup, std::abs(fit.spline(std::min(x, 3.0)) - (x * x * x - 2 * x + 1)));
    }
    CHECK(sup < 1e-9);
    CHECK(fit.rms < 1e-10);
  }

  SUBCASE("too few samples is ill-posed") {
    const auto few = SampleSet::univariate({-1.0, 0.0, 1.0}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(fit_spline_lsq(few, g), IllPosedError);
  }

  SUBCASE("clustered samples are ill-posed") {
    // All samples in one segment cannot determine five coefficients.
    std::vector<double> near, f;
    for (int i = 0; i < 40; ++i) {
      near.push_back(0.01 * i);
      f.push_back(1.0);
    }
    try {
      fit_spline_lsq(SampleSet::univariate(near, f), g);
      FAIL("expected IllPosedError");
    } catch (const IllPosedError& e) {
      CHECK(e.rcond() < kWellPosedRcond);
    }
  }

  SUBCASE("bivariate cubic reproduction") {
    const auto grid = make_knot_grid_2d({-3, 3, -3, 3}, 1.5);
    std::vector<Point2> pts;
    std::vector<double> f;
    auto q = [](double x, double y) { return x * x * x * y * y - 0.5 * x * y * y * y + y - 2.0; };
    for (int i = 0; i <= 24; ++i) {
      for (int j = 0; j <= 24; ++j) {
        const Point2 p{-3.0 + 0.25 * i, -3.0 + 0.25 * j};
        pts.push_back(p);
        f.push_back(q(p.x, p.y));
      }
    }
    const auto fit = fit_spline_lsq(SampleSet::bivariate(pts, f), grid);
    double sup = 0.0;
    for (int i = 0; i <= 96; ++i) {
      for (int j = 0; j <= 96; ++j) {
        const double x = -3.0 + 0.0625 * i, y = -3.0 + 0.0625 * j;
        sup = std::max(sup, std::abs(fit.spline(x, y) - q(x, y)));
      }
    }
    CHECK(sup < 1e-8);
  }
}

TEST_CASE("sample set mesh size") {
  std::vector<Point2> pts;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) pts.push_back({0.5 * i, 0.5 * j});
  }
  const auto s = SampleSet::bivariate(pts, std::vector<double>(pts.size(), 0.0));
  CHECK(s.mesh_h() == doctest::Approx(0.5));
  REQUIRE(s.layout().has_value());
  CHECK(s.layout()->nx == 5);
  CHECK(s.layout()->ny == 4);

  std::vector<Point2> scattered{{0, 0}, {0.3, 0}, {1, 1}, {1.1, 1}, {5, 5}};
  const auto t = SampleSet::bivariate(scattered, std::vector<double>(5, 0.0));
  CHECK_FALSE(t.layout().has_value());
  CHECK(t.mesh_h() == doctest::Approx(0.3));

  CHECK_THROWS_AS(SampleSet::univariate({1.0, 2.0}, {1.0}), std::invalid_argument);
}
