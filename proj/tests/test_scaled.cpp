#include "bpdep/scaled.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

using bpdep::ScaledReal;

TEST_CASE("round trip and basic arithmetic match double") {
  const double xs[] = {0.0, 1.0, -3.5, 1e-300, 1e300, 0.125, 7.25e-12};
  for (double a : xs) {
    CHECK(ScaledReal(a).to_double() == a);
    for (double b : xs) {
      CHECK((ScaledReal(a) * ScaledReal(b)).to_double() == Catch::Approx(a * b).margin(0));
      CHECK((ScaledReal(a) + ScaledReal(b)).to_double() ==
            Catch::Approx(a + b).epsilon(1e-15));
      CHECK((ScaledReal(a) - ScaledReal(b)).to_double() ==
            Catch::Approx(a - b).epsilon(1e-15));
    }
  }
}

TEST_CASE("products far beyond double range stay exact in ratio") {
  ScaledReal big(1.0);
  ScaledReal small(1.0);
  for (int i = 0; i < 4000; ++i) {
    big *= ScaledReal(2.5);      // ~2.5^4000, overflows double at ~775 steps
    small *= ScaledReal(0.125);  // underflows double
  }
  CHECK(std::isinf(big.to_double()));
  CHECK(small.to_double() == 0.0);
  CHECK((big * small).log() == Catch::Approx(4000.0 * std::log(0.3125)).epsilon(1e-12));
  // ratio of two huge numbers is finite and correct
  ScaledReal big2 = big * ScaledReal(3.0);
  CHECK((big2 / big).to_double() == Catch::Approx(3.0).epsilon(1e-15));
  CHECK(big.log() == Catch::Approx(4000.0 * std::log(2.5)).epsilon(1e-12));
  CHECK(small.log() == Catch::Approx(4000.0 * std::log(0.125)).epsilon(1e-12));
}

TEST_CASE("addition drops only negligible terms") {
  ScaledReal a = ScaledReal::from_parts(1.0, 2);
  ScaledReal b = ScaledReal::from_parts(1.0, 0);
  ScaledReal c = a + b;  // b is 2^-1024 relative to a: dropped
  CHECK(c.mantissa() == a.mantissa());
  CHECK(c.chunk() == a.chunk());

  ScaledReal d = ScaledReal::from_parts(1.0, 1);
  ScaledReal e = ScaledReal::from_parts(std::ldexp(1.0, 200), 0);  // 2^200
  // d = 2^512, e = 2^200: adjacent chunks, e contributes 2^-312 relative
  ScaledReal f = d + e;
  CHECK(f.log() == Catch::Approx(512.0 * M_LN2).epsilon(1e-12));
}

TEST_CASE("signs and cancellation") {
  ScaledReal a(3.0), b(-3.0);
  CHECK((a + b).is_zero());
  CHECK((a * b).to_double() == -9.0);
  CHECK((-a).to_double() == -3.0);
  CHECK(ScaledReal(0.0).is_zero());
  CHECK(!ScaledReal(0.0).positive());
  CHECK(a.positive());
  CHECK(!b.positive());
}
