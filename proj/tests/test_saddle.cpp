#include <cmath>
#include <cstdint>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "friable/saddle.hpp"
#include "friable/smooth.hpp"

using namespace friable;

namespace {
const std::vector<std::int64_t> kJustTwo = {2};

// closed form for y = 2: 2^alpha = 1 + log 2/log x
double alpha_y2(double x) { return std::log2(1.0 + std::log(2.0) / std::log(x)); }
}  // namespace

TEST_CASE("phi closed form at y = 2") {
  PhiValue pv = phi(1.0, kJustTwo);
  CHECK_THAT(pv.value, Catch::Matchers::WithinRel(std::log(2.0), 1e-15));

  // value = log2/(2^a - 1) for any a
  for (double a : {0.1, 0.5, 0.705694644492112, 2.0}) {
    PhiValue p = phi(a, kJustTwo);
    CHECK_THAT(p.value, Catch::Matchers::WithinRel(std::log(2.0) / (std::pow(2.0, a) - 1.0),
                                                   1e-13));
    CHECK(p.derivative < 0.0);
  }

  CHECK_THROWS_AS(phi(0.0, kJustTwo), std::domain_error);
  CHECK_THROWS_AS(phi(-1.0, kJustTwo), std::domain_error);
}

TEST_CASE("phi strictly decreasing") {
  auto primes = sieve_primes(13);
  double prev = phi(0.05, primes).value;
  for (double a = 0.1; a <= 2.0; a += 0.05) {
    double cur = phi(a, primes).value;
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("solve_alpha against the single-prime closed form") {
  CHECK_THAT(solve_alpha(SmoothBound(256, 2)),
             Catch::Matchers::WithinRel(std::log2(9.0 / 8.0), 1e-12));
  CHECK_THAT(solve_alpha(SmoothBound(3, 2)), Catch::Matchers::WithinRel(alpha_y2(3.0), 1e-12));
  for (std::int64_t x : {4, 10, 100, 1000, 1 << 20})
    CHECK_THAT(solve_alpha(SmoothBound(x, 2)),
               Catch::Matchers::WithinRel(alpha_y2(static_cast<double>(x)), 1e-12));
}

TEST_CASE("solve_alpha residual contract and determinism") {
  for (auto [x, y] : std::vector<std::pair<std::int64_t, std::int64_t>>{
           {1000, 5}, {10000, 7}, {100000, 13}, {1000000, 31}, {50, 47}}) {
    auto primes = sieve_primes(y);
    double a = solve_alpha(primes, x);
    CHECK(std::fabs(phi(a, primes).value - std::log(static_cast<double>(x))) <=
          1e-13 * std::log(static_cast<double>(x)));
    // bitwise identical on repeat
    CHECK(solve_alpha(primes, x) == a);
  }

  CHECK_THROWS_AS(solve_alpha(SmoothBound(100, 7), 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(solve_alpha(SmoothBound(100, 7), 1e-16), std::invalid_argument);
}

TEST_CASE("alpha monotone in x and y") {
  double prev = solve_alpha(SmoothBound(100, 13));
  for (std::int64_t x : {1000, 10000, 100000}) {
    double cur = solve_alpha(SmoothBound(x, 13));
    CHECK(cur < prev);
    prev = cur;
  }
  prev = solve_alpha(SmoothBound(100000, 2));
  for (std::int64_t y : {3, 5, 7, 11, 13}) {
    double cur = solve_alpha(SmoothBound(100000, y));
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("g_factor") {
  CHECK(g_factor({}, 1.0) == 1.0);
  const std::int64_t p2[] = {2};
  const std::int64_t p23[] = {2, 3};
  CHECK_THAT(g_factor(p2, 1.0), Catch::Matchers::WithinRel(0.5, 1e-15));
  CHECK_THAT(g_factor(p23, 1.0), Catch::Matchers::WithinRel(1.0 / 3.0, 1e-15));
  CHECK_THROWS_AS(g_factor(p2, 0.0), std::domain_error);
}

TEST_CASE("build_context convenience wrapper") {
  SaddleContext a = build_context(SmoothBound(1000, 5));
  SaddleContext b(SmoothBound(1000, 5));
  CHECK(a.alpha() == b.alpha());
  CHECK(a.sigma2() == b.sigma2());
}

TEST_CASE("context scalars at the dim-1 fixture") {
  SaddleContext ctx(SmoothBound(3, 2));
  CHECK(ctx.h() == 1);
  CHECK_THAT(ctx.u(), Catch::Matchers::WithinRel(std::log(3.0) / std::log(2.0), 1e-15));
  CHECK(ctx.ubar() == 1.0);
  double a = alpha_y2(3.0);
  CHECK_THAT(ctx.alpha(), Catch::Matchers::WithinRel(a, 1e-12));
  CHECK_THAT(ctx.w(0), Catch::Matchers::WithinRel(std::pow(2.0, -a), 1e-12));
  CHECK_THAT(ctx.g(0), Catch::Matchers::WithinRel(1.0 - std::pow(2.0, -a), 1e-12));
}

TEST_CASE("context scalars at (1024, 3) and (256, 2)") {
  SaddleContext ctx(SmoothBound(1024, 3));
  CHECK(ctx.h() == 2);
  CHECK_THAT(ctx.u(), Catch::Matchers::WithinRel(10.0 * std::log(2.0) / std::log(3.0), 1e-15));
  CHECK(ctx.ubar() == 2.0);

  SaddleContext c256(SmoothBound(256, 2));
  // w_2 = (9/8)^{-8} = (8/9)^8 exactly, sigma2 = 72 log^2 2
  CHECK_THAT(c256.w(0), Catch::Matchers::WithinRel(std::pow(8.0 / 9.0, 8.0), 1e-12));
  CHECK_THAT(c256.sigma2(),
             Catch::Matchers::WithinRel(72.0 * std::log(2.0) * std::log(2.0), 1e-12));
  // sigma2 = -phi'(alpha)
  PhiValue pv = phi(c256.alpha(), c256.space().primes());
  CHECK_THAT(c256.sigma2(), Catch::Matchers::WithinRel(-pv.derivative, 1e-14));
}

TEST_CASE("weight envelope holds across a grid") {
  for (auto [x, y] : std::vector<std::pair<std::int64_t, std::int64_t>>{
           {3, 2}, {256, 2}, {64, 2}, {1000, 5}, {10000, 7}, {100000, 13}, {1000000, 31},
           {1024, 3}, {59, 53}}) {
    SaddleContext ctx(SmoothBound(x, y));
    CHECK(ctx.weight_envelope_violations().empty());
    // exact re-statement of both chains, independent of the class internals
    double a = ctx.alpha();
    double xd = static_cast<double>(x), yd = static_cast<double>(y);
    for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
      double lhs = std::pow(xd, -a);
      double wp = ctx.w(i);
      CHECK(wp >= lhs * (1 - 1e-12));
      CHECK(wp <= std::min(std::pow(yd / xd, a), std::pow(xd, -a / 2)) * (1 + 1e-12));
      double ratio = wp * std::pow(static_cast<double>(ctx.prime(i)), -a);
      CHECK(ratio >= std::pow(xd * yd, -a) * (1 - 1e-12));
      CHECK(ratio <= std::pow(xd, -a) * (1 + 1e-12));
    }
    // soft order check on the saddle location
    CHECK(ctx.alpha() * ctx.log_x() / ctx.ubar() >= 0.05);
    // sigma2 order check, constants unknown so the band is generous
    double ly = std::log(yd);
    double ratio = ctx.sigma2() * ctx.ubar() / (ctx.u() * ly * ctx.u() * ly);
    CHECK(ratio >= 0.02);
    CHECK(ratio <= 50.0);
  }
}

TEST_CASE("corrupted weight table is reported") {
  SaddleContext ctx(SmoothBound(10000, 7));
  std::vector<double> w;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) w.push_back(ctx.w(i));
  w[2] *= 0.01;
  auto violations = ctx.weight_envelope_violations(w);
  REQUIRE_FALSE(violations.empty());
  CHECK(violations.front().find("p = 5") != std::string::npos);
}

TEST_CASE("t and v values") {
  SaddleContext ctx(SmoothBound(8, 3));
  CHECK(ctx.t_value(0, 0) == 0.0);
  CHECK_THAT(ctx.t_value(0, 3), Catch::Matchers::WithinRel(1.0, 1e-15));  // 2^3 = x

  // v_{p^nu} = nu log p - log p/(p^a - 1); v at nu=0 vanishes
  SaddleContext c(SmoothBound(1000, 7));
  double a = c.alpha();
  CHECK(c.v_value(0, 0) == 0.0);
  for (std::size_t i = 0; i < c.prime_count(); ++i) {
    double lp = std::log(static_cast<double>(c.prime(i)));
    CHECK_THAT(c.v_value(i, 2),
               Catch::Matchers::WithinRel(2.0 * lp - lp / (std::pow(c.prime(i), a) - 1.0),
                                          1e-12));
  }

  // additivity over distinct primes
  std::pair<std::int64_t, int> k1[] = {{2, 3}, {5, 1}};
  CHECK_THAT(v_value(c, k1), Catch::Matchers::WithinRel(c.v_value(0, 3) + c.v_value(2, 1), 1e-13));
  std::pair<std::int64_t, int> trivial[] = {{2, 0}};
  CHECK(v_value(c, trivial) == 0.0);
  std::pair<std::int64_t, int> unknown[] = {{11, 1}};
  CHECK_THROWS_AS(v_value(c, unknown), std::invalid_argument);
}
