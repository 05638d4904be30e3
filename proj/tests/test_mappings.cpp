#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hybridproj/error.hpp"
#include "hybridproj/mappings.hpp"

using namespace hybridproj;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

AffineMonotoneOperator identity_op(Eigen::Index d) {
  return {Eigen::MatrixXd::Identity(d, d), Vector::Zero(d)};
}

}  // namespace

TEST_CASE("eval_threshold") {
  CHECK(eval_threshold({0.5, 1.5}, 0.5) == 0.0);
  CHECK(eval_threshold({0.5, 1.5}, 0.2) == 0.0);
  for (double t : {0.1, 0.25, 0.5, 0.9}) {
    const double s = 1.0 + t;
    CHECK(eval_threshold({t, s}, 1.0) == doctest::Approx(s * (1.0 - t)));
  }
  CHECK(eval_threshold({0.25, 1.25}, 0.75) == doctest::Approx(0.625));
  CHECK(code_of([] { eval_threshold({0.5, 1.5}, 1.5); }) == ErrorCode::DomainViolation);
  CHECK(code_of([] { eval_threshold({0.5, 1.5}, -0.1); }) == ErrorCode::DomainViolation);
}

TEST_CASE("threshold maps validate their parameters") {
  CHECK_NOTHROW(PiecewiseThresholdMap({0.5, 2.0}).validate());
  CHECK_THROWS_AS(PiecewiseThresholdMap({0.5, 2.5}).validate(), Error);
  CHECK_THROWS_AS(PiecewiseThresholdMap({0.5, 1.0}).validate(), Error);
  CHECK_THROWS_AS(PiecewiseThresholdMap({1.0, 1.5}).validate(), Error);
  CHECK_THROWS_AS(MappingFamily::threshold({}), Error);
}

TEST_CASE("make_experiment_family") {
  const MappingFamily one = make_experiment_family(1);
  REQUIRE(one.size() == 1);
  CHECK(one.thresholds()[0].t == 0.5);
  CHECK(one.thresholds()[0].s == 1.5);

  const MappingFamily five = make_experiment_family(5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(five.thresholds()[i].t == doctest::Approx((i + 1) / 6.0));
    CHECK(five.thresholds()[i].s == doctest::Approx(1.0 + (i + 1) / 6.0));
    CHECK(five.at(i)(scalar(0.0))[0] == 0.0);
  }
  CHECK(five.tag() == MappingClass::QuasiPhi);
  CHECK(five.k(17) == 1.0);
  CHECK(five.domain().contains(scalar(1.0)));
  CHECK_FALSE(five.domain().contains(scalar(1.01)));
  CHECK_FALSE(five.lipschitz(0).has_value());
}

TEST_CASE("apply_power") {
  const MappingFamily fam = make_experiment_family(3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vector x = scalar(u(rng));
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const Mapping m = fam.at(i);
      CHECK(apply_power(m, 1, x) == m(x));
      const double once = m(x)[0];
      const double twice = eval_threshold(fam.thresholds()[i], once);
      CHECK(apply_power(m, 2, x)[0] == twice);
      if (once <= fam.thresholds()[i].t) CHECK(twice == 0.0);
      // T^(a+b) = T^a T^b
      CHECK(apply_power(m, 5, x) == apply_power(m, 2, apply_power(m, 3, x)));
    }
  }
  for (std::uint64_t n : {1, 2, 10, 1000000}) CHECK(apply_power(fam.at(1), n, scalar(0.0))[0] == 0.0);
  CHECK(apply_power(fam.at(0), 0, scalar(0.7))[0] == 0.7);
}

TEST_CASE("resolvent") {
  SUBCASE("identity operator halves the input") {
    const Vector x = Vector::LinSpaced(3, -1.0, 2.0);
    CHECK((resolvent(identity_op(3), 1.0, x) - x / 2.0).norm() < 1e-15);
  }
  SUBCASE("zero of the operator is fixed") {
    CHECK(resolvent(identity_op(2), 0.7, Vector::Zero(2)).norm() == 0.0);
  }
  SUBCASE("hand solve") {
    const AffineMonotoneOperator op{Eigen::MatrixXd::Constant(1, 1, 2.0), scalar(-2.0)};
    const Vector y = resolvent(op, 0.5, scalar(1.0));
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(op.apply(y)[0] == doctest::Approx(0.0));
  }
  SUBCASE("phi(0, J_r x) <= phi(0, x)") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 3.0);
    for (double r : {0.5, 1.0, 2.0}) {
      for (int k = 0; k < 100; ++k) {
        const Vector x{{g(rng), g(rng)}};
        CHECK(resolvent(identity_op(2), r, x).squaredNorm() <= x.squaredNorm());
      }
    }
  }
  CHECK(code_of([] { resolvent(identity_op(1), 0.0, scalar(1.0)); }) == ErrorCode::InvalidArgument);
  const AffineMonotoneOperator bad{Eigen::MatrixXd::Constant(1, 1, -1.0), scalar(0.0)};
  CHECK_THROWS_AS(bad.validate(), Error);
  // Monotone M keeps I + rM invertible, so validation rejects this first.
  CHECK(code_of([&] { resolvent(bad, 1.0, scalar(1.0)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("resolvent families") {
  std::vector<AffineMonotoneOperator> ops(3, identity_op(2));
  const MappingFamily fam = MappingFamily::resolvents(ops, {0.5, 1.0, 2.0});
  CHECK(fam.tag() == MappingClass::RelativelyNonexpansive);
  CHECK(fam.dim() == 2);
  CHECK(fam.lipschitz(1) == 1.0);
  const Vector x{{1.0, 1.0}};
  for (std::size_t i = 0; i < 3; ++i) {
    const Vector y = fam.at(i)(x);
    CHECK((y - x / (1.0 + fam.radius(i))).norm() < 1e-15);
  }

  // A_i(x) = x - 1 pushes [0, 0.5] out towards 1.
  const AffineMonotoneOperator shifted{Eigen::MatrixXd::Identity(1, 1), scalar(-1.0)};
  const MappingFamily boxed =
      MappingFamily::resolvents({shifted, shifted}, {1.0, 2.0}, Box::uniform(1, 0.0, 0.5));
  double out = 0.0;
  const double in = 0.5;
  CHECK(code_of([&] { boxed.apply(0, 1, {&in, 1}, {&out, 1}); }) == ErrorCode::DomainViolation);

  CHECK_THROWS_AS(MappingFamily::resolvents(ops, {1.0}), Error);
}

TEST_CASE("asymptotic constants") {
  const MappingFamily fam = make_experiment_family(2).with_asymptotic_constants(1.0);
  CHECK(fam.tag() == MappingClass::AsymptoticallyQuasiPhi);
  CHECK(fam.k(1) == 2.0);
  CHECK(fam.k(4) == 1.25);
  CHECK(make_experiment_family(2).with_asymptotic_constants(0.0).tag() == MappingClass::QuasiPhi);
  CHECK_THROWS_AS(make_experiment_family(2).with_asymptotic_constants(-1.0), Error);
}

TEST_CASE("identity family") {
  const MappingFamily fam = MappingFamily::identity(2, Box::unbounded(3));
  const Vector x{{1.0, -2.0, 3.0}};
  CHECK(fam.at(1)(x) == x);
  CHECK(apply_power(fam.at(0), 50, x) == x);
}
