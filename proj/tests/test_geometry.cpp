#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hybridproj/error.hpp"
#include "hybridproj/geometry.hpp"
#include "oracle/qp_oracle.hpp"

using namespace hybridproj;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

bool member(const HalfSpace& h, const Vector& v) { return h.normal.dot(v) <= h.offset; }

}  // namespace

TEST_CASE("lyapunov is the squared distance") {
  const Vector x = vec({0.3, -1.2, 4.0});
  CHECK(lyapunov(x, x) == 0.0);
  CHECK(lyapunov(vec({1, 0}), vec({0, 0})) == doctest::Approx(1.0));
  CHECK(lyapunov(vec({0.5}), vec({0.2})) == doctest::Approx(0.09));
  CHECK_THROWS_AS(lyapunov(vec({1}), vec({1, 2})), Error);
}

TEST_CASE("mann_halfspace") {
  SUBCASE("equal points give the whole space") {
    const HalfSpace h = mann_halfspace(vec({0.4, 0.1}), vec({0.4, 0.1}), 0.0);
    CHECK(h.degenerate());
    CHECK(h.offset == 0.0);
  }
  SUBCASE("hand example") {
    // |v - 0.5|^2 <= |v - 1|^2  <=>  v <= 0.75
    const HalfSpace h = mann_halfspace(vec({1.0}), vec({0.5}), 0.0);
    CHECK(h.offset / h.normal[0] == doctest::Approx(0.75));
    CHECK(h.normal[0] > 0.0);
  }
  SUBCASE("membership matches the phi inequality") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ue(0.0, 0.5);
    int agree = 0;
    for (int k = 0; k < 2000; ++k) {
      const Vector x = random_vector(rng, 3), y = random_vector(rng, 3), v = random_vector(rng, 3, 2);
      const double eps = ue(rng);
      const HalfSpace h = mann_halfspace(x, y, eps);
      const double lhs = lyapunov(v, y), rhs = lyapunov(v, x) + eps;
      if (std::abs(lhs - rhs) < 1e-9) continue;
      CHECK(member(h, v) == (lhs <= rhs));
      ++agree;
    }
    CHECK(agree > 1900);
  }
  CHECK_THROWS_AS(mann_halfspace(vec({1}), vec({0}), -1.0), Error);
}

TEST_CASE("halpern_halfspace") {
  std::mt19937_64 rng(11);
  SUBCASE("alpha = 0 collapses to the Mann cut") {
    for (int k = 0; k < 50; ++k) {
      const Vector a = random_vector(rng, 3), x = random_vector(rng, 3), y = random_vector(rng, 3);
      const HalfSpace h = halpern_halfspace(a, x, y, 0.0, 0.1);
      const HalfSpace m = mann_halfspace(x, y, 0.1);
      CHECK((h.normal - m.normal).norm() == doctest::Approx(0.0));
      CHECK(h.offset == doctest::Approx(m.offset));
    }
  }
  SUBCASE("alpha = 1 with anchor = ybar is the whole space") {
    const Vector y = vec({0.2, -0.7});
    const HalfSpace h = halpern_halfspace(y, vec({3, 1}), y, 1.0, 0.0);
    CHECK(h.degenerate());
    CHECK(h.offset >= 0.0);
  }
  SUBCASE("membership matches the phi inequality") {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
      const Vector a = random_vector(rng, 3), x = random_vector(rng, 3), y = random_vector(rng, 3);
      const Vector v = random_vector(rng, 3, 2);
      const double alpha = u01(rng), eps = 0.3 * u01(rng);
      const HalfSpace h = halpern_halfspace(a, x, y, alpha, eps);
      const double lhs = lyapunov(v, y);
      const double rhs = alpha * lyapunov(v, a) + (1 - alpha) * lyapunov(v, x) + eps;
      if (std::abs(lhs - rhs) < 1e-9) continue;
      CHECK(member(h, v) == (lhs <= rhs));
    }
  }
  CHECK_THROWS_AS(halpern_halfspace(vec({0}), vec({0}), vec({0}), 1.5, 0.0), Error);
}

TEST_CASE("q_halfspace") {
  SUBCASE("x_start = x_n is the whole space") {
    const HalfSpace h = q_halfspace(vec({1, 2}), vec({1, 2}));
    CHECK(h.degenerate());
    CHECK(h.offset == 0.0);
  }
  SUBCASE("1-D hand example keeps the side of the fixed point") {
    // <x_n - v, x_start - x_n> >= 0 with x_start = 1, x_n = 0.5: v <= 0.5.
    const HalfSpace h = q_halfspace(vec({1.0}), vec({0.5}));
    CHECK(member(h, vec({0.0})));
    CHECK(member(h, vec({0.5})));
    CHECK_FALSE(member(h, vec({0.6})));
  }
  SUBCASE("x_n lies on the boundary") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
      const Vector s = random_vector(rng, 4), x = random_vector(rng, 4);
      const HalfSpace h = q_halfspace(s, x);
      CHECK(h.normal.dot(x) == h.offset);
    }
  }
}

TEST_CASE("project_halfspace") {
  const HalfSpace h(vec({1, 0}), 1.0);
  CHECK(project_halfspace(vec({0.5, 3}), h) == vec({0.5, 3}));
  CHECK((project_halfspace(vec({2, 0}), h) - vec({1, 0})).norm() < 1e-15);
  CHECK((project_halfspace(vec({2, 2}), HalfSpace(vec({1, 1}), 2.0)) - vec({1, 1})).norm() <
        1e-15);
  CHECK_THROWS_AS(project_halfspace(vec({0, 0}), HalfSpace(vec({0, 0}), -1.0)), Error);
}

TEST_CASE("project_intersection examples") {
  ProjectionSettings settings;
  SUBCASE("single half-space equals project_halfspace") {
    const std::vector<HalfSpace> c{HalfSpace(vec({1, 2}), 0.5)};
    const Vector x0 = vec({3, -1});
    CHECK((project_intersection(x0, c, settings).point - project_halfspace(x0, c[0])).norm() <
          1e-14);
  }
  SUBCASE("separable box") {
    const std::vector<HalfSpace> c{HalfSpace(vec({1, 0}), 1.0), HalfSpace(vec({0, 1}), 0.0)};
    CHECK((project_intersection(vec({2, 2}), c, settings).point - vec({1, 0})).norm() < 1e-10);
  }
  SUBCASE("two active constraints") {
    const std::vector<HalfSpace> c{HalfSpace(vec({1, 1}), 1.0), HalfSpace(vec({1, -1}), 1.0)};
    CHECK((project_intersection(vec({2, 0}), c, settings).point - vec({1, 0})).norm() < 1e-10);
  }
  SUBCASE("1-D interval closed form") {
    const std::vector<HalfSpace> c{HalfSpace(vec({2.0}), 1.0), HalfSpace(vec({-1.0}), 0.0)};
    const Projection p = project_intersection(vec({3.0}), c, settings);
    CHECK(p.point[0] == 0.5);
    CHECK(p.status == ProjectionStatus::Exact);
  }
  SUBCASE("empty 1-D interval") {
    const std::vector<HalfSpace> c{HalfSpace(vec({1.0}), 0.0), HalfSpace(vec({-1.0}), -1.0)};
    CHECK_THROWS_AS(project_intersection(vec({0.5}), c, settings), Error);
  }
  SUBCASE("disjoint half-planes are infeasible") {
    const std::vector<HalfSpace> c{HalfSpace(vec({1, 0}), 0.0), HalfSpace(vec({-1, 0}), -1.0),
                                   HalfSpace(vec({0, 1}), 5.0)};
    ProjectionSettings s;
    s.max_sweeps = 200;
    try {
      project_intersection(vec({0.5, 0.5}), c, s);
      FAIL("expected Infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Infeasible);
    }
  }
  SUBCASE("degenerate constraints") {
    const std::vector<HalfSpace> whole{HalfSpace(vec({0, 0}), 0.0)};
    CHECK(project_intersection(vec({4, 5}), whole, settings).point == vec({4, 5}));
    const std::vector<HalfSpace> empty{HalfSpace(vec({0, 0}), -1.0)};
    CHECK_THROWS_AS(project_intersection(vec({4, 5}), empty, settings), Error);
  }
  CHECK_THROWS_AS(project_intersection(vec({1}), std::vector<HalfSpace>{}, settings), Error);
}

TEST_CASE("project_intersection agrees with the exhaustive active-set oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 3), count(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ProjectionSettings settings;
  int checked = 0;
  while (checked < 200) {
    const Eigen::Index d = dim(rng);
    const int m = count(rng);
    // A known interior point keeps every instance feasible.
    const Vector inside = random_vector(rng, d);
    std::vector<HalfSpace> cuts;
    std::vector<oracle::Cut> plain;
    for (int i = 0; i < m; ++i) {
      const Vector a = random_vector(rng, d);
      const double b = a.dot(inside) + 0.5 * std::abs(u(rng));
      cuts.emplace_back(a, b);
      plain.push_back({a, b});
    }
    const Vector x0 = random_vector(rng, d, 3.0);
    const auto expected = oracle::brute_force_projection(x0, plain);
    REQUIRE(expected.has_value());
    const Vector got = project_intersection(x0, cuts, settings).point;
    CHECK((got - *expected).norm() <= 1e-8);

    // <z - p, x0 - p> <= 0 for every feasible z.
    for (int k = 0; k < 20; ++k) {
      const Vector z = inside + 0.3 * std::abs(u(rng)) * (random_vector(rng, d) * 0.1);
      bool ok = true;
      for (const HalfSpace& h : cuts) ok = ok && member(h, z);
      if (!ok) continue;
      CHECK((z - got).dot(x0 - got) <= 1e-8);
    }
    ++checked;
  }
}
