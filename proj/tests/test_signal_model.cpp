#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "lims/signal_model.hpp"

using namespace lims;

namespace {

// Register-level C/A generator written from the G1/G2 tap description, with the
// G2 delay table instead of phase-selector taps.
std::vector<int> reference_ca(int delay) {
  std::vector<int> g1(1023), g2(1023);
  std::array<int, 10> r1, r2;
  r1.fill(1);
  r2.fill(1);
  for (int i = 0; i < 1023; ++i) {
    g1[i] = r1[9];
    g2[i] = r2[9];
    const int f1 = r1[2] ^ r1[9];
    const int f2 = r2[1] ^ r2[2] ^ r2[5] ^ r2[7] ^ r2[8] ^ r2[9];
    for (int k = 9; k > 0; --k) {
      r1[k] = r1[k - 1];
      r2[k] = r2[k - 1];
    }
    r1[0] = f1;
    r2[0] = f2;
  }
  std::vector<int> out(1023);
  for (int i = 0; i < 1023; ++i) out[i] = g1[i] ^ g2[(i - delay + 1023) % 1023];
  return out;
}

int first_ten_octal(const ChipSequence& c) {
  int v = 0;
  for (int i = 0; i < 10; ++i) v = v * 2 + (c.chips[i] > 0 ? 1 : 0);
  return v;
}

int periodic_correlation(const ChipSequence& a, const ChipSequence& b, int shift) {
  int s = 0;
  for (int i = 0; i < 1023; ++i) s += a.chips[i] * b.chips[(i + shift) % 1023];
  return s;
}

// Triangle convolved with B sinc(B v), Simpson's rule on a fine grid.
double lowpassed_triangle(double zeta, double chip, double bw) {
  const int n = 20000;
  const double h = 2 * chip / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double u = -chip + i * h;
    const double tri = 1 - std::abs(u) / chip;
    const double v = zeta - u;
    const double x = M_PI * bw * v;
    const double k = bw * (std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x);
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * tri * k;
  }
  return s * h / 3;
}

}  // namespace

TEST_CASE("ideal ACF is the unit triangle") {
  const auto m = AcfModel::ideal(kGpsChip);
  CHECK(m.value(0) == doctest::Approx(1.0));
  CHECK(m.value(0.5 * kGpsChip) == doctest::Approx(0.5));
  CHECK(m.value(-0.5 * kGpsChip) == doctest::Approx(0.5));
  CHECK(m.value(kGpsChip) == doctest::Approx(0.0));
  CHECK(m.value(1.5 * kGpsChip) == 0.0);
  CHECK(m.value(-1.0 * kGpsChip) == 0.0);
  CHECK(m.kind() == AcfKind::ideal);
  CHECK_FALSE(m.bandwidth());
}

TEST_CASE("ideal ACF delay derivative follows the half-open convention") {
  const double tc = kGpsChip;
  const auto m = AcfModel::ideal(tc);
  CHECK(m.delay_derivative(-0.5 * tc) == doctest::Approx(-1 / tc));
  CHECK(m.delay_derivative(0.0) == doctest::Approx(-1 / tc));
  CHECK(m.delay_derivative(0.3 * tc) == doctest::Approx(1 / tc));
  CHECK(m.delay_derivative(tc) == doctest::Approx(1 / tc));
  CHECK(m.delay_derivative(-tc) == 0.0);
  CHECK(m.delay_derivative(1.2 * tc) == 0.0);
  // Finite difference of R(zeta - t) in t away from the kinks.
  for (double z : {-0.7, -0.2, 0.4, 0.9}) {
    const double h = 1e-6 * tc;
    const double fd = (m.value(z * tc - h) - m.value(z * tc + h)) / (2 * h);
    CHECK(m.delay_derivative(z * tc) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("C/A code matches the register-level reference") {
  const std::array<int, 32> delays{5,   6,   7,   8,   17,  18,  139, 140, 141, 251, 252,
                                   254, 255, 256, 257, 258, 469, 470, 471, 472, 473, 474,
                                   509, 512, 513, 514, 515, 516, 859, 860, 861, 862};
  for (int prn = 1; prn <= 32; ++prn) {
    const auto code = gen_ca_code(prn);
    REQUIRE(code.period() == 1023);
    // The register reference uses 0 -> +1 sign-free bits; compare up to a global sign.
    const auto ref = reference_ca(delays[prn - 1]);
    int agree = 0;
    for (int i = 0; i < 1023; ++i) agree += (code.chips[i] > 0) == (ref[i] == 1);
    CHECK((agree == 1023 || agree == 0));
  }
}

TEST_CASE("C/A code first ten chips and balance") {
  CHECK(first_ten_octal(gen_ca_code(1)) == 01440);
  CHECK(first_ten_octal(gen_ca_code(2)) == 01620);
  CHECK(first_ten_octal(gen_ca_code(3)) == 01710);
  CHECK(first_ten_octal(gen_ca_code(5)) == 01133);
  CHECK(first_ten_octal(gen_ca_code(10)) == 01504);
  CHECK(first_ten_octal(gen_ca_code(32)) == 01712);
  for (int prn : {1, 7, 19, 32}) {
    const auto c = gen_ca_code(prn);
    const int plus = static_cast<int>(std::count(c.chips.begin(), c.chips.end(), 1));
    CHECK(plus == 512);
  }
}

TEST_CASE("C/A autocorrelation and cross-correlation take Gold values") {
  const auto a = gen_ca_code(1);
  const auto b = gen_ca_code(2);
  CHECK(periodic_correlation(a, a, 0) == 1023);
  for (int s = 1; s < 1023; s += 37) {
    const int r = periodic_correlation(a, a, s);
    CHECK((r == -1 || r == -65 || r == 63));
    const int x = periodic_correlation(a, b, s);
    CHECK((x == -1 || x == -65 || x == 63));
  }
}

TEST_CASE("C/A generator rejects out-of-range PRN") {
  CHECK_THROWS_AS(gen_ca_code(0), std::invalid_argument);
  CHECK_THROWS_AS(gen_ca_code(33), std::invalid_argument);
}

TEST_CASE("band-limited ACF matches direct quadrature") {
  const double tc = kGpsChip;
  for (double bw : {2e6, 8e6}) {
    const auto m = make_bandlimited_acf(tc, bw, tc / 1000);
    CHECK(m.kind() == AcfKind::bandlimited);
    for (double z : {0.0, 0.25, -0.5, 0.8, 1.3, -2.1}) {
      CHECK(m.value(z * tc) == doctest::Approx(lowpassed_triangle(z * tc, tc, bw)).epsilon(1e-4));
    }
  }
}

TEST_CASE("band-limited ACF peaks and symmetry") {
  const double tc = kGpsChip;
  const auto wide = make_bandlimited_acf(tc, 1e9, tc / 1000);
  CHECK(wide.value(0) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(wide.value(0.5 * tc) == doctest::Approx(0.5).epsilon(2e-3));
  const auto m8 = make_bandlimited_acf(tc, 8e6, tc / 1000);
  CHECK(m8.value(0) == doctest::Approx(0.9747).epsilon(1e-3));
  const auto m2 = make_bandlimited_acf(tc, 2e6, tc / 1000);
  CHECK(m2.value(0) < m8.value(0));
  for (double z : {0.1, 0.6, 1.4}) {
    CHECK(m2.value(z * tc) == doctest::Approx(m2.value(-z * tc)));
    CHECK(m2.delay_derivative(z * tc) == doctest::Approx(-m2.delay_derivative(-z * tc)));
  }
  CHECK(m2.delay_derivative(0) == doctest::Approx(0.0).scale(1 / tc));
}

TEST_CASE("band-limited slope agrees with finite differences of the value") {
  const double tc = kGpsChip;
  const auto m = make_bandlimited_acf(tc, 2e6, tc / 1000);
  for (double z : {-1.1, -0.37, 0.21, 0.77}) {
    const double h = 1e-3 * tc;
    const double fd = (m.value(z * tc - h) - m.value(z * tc + h)) / (2 * h);
    CHECK(m.delay_derivative(z * tc) == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("band-limited table kernel is identical serial and parallel") {
  const auto s = bandlimited_half_table_serial(kGpsChip, 2e6, kGpsChip / 1000, 500);
  const auto p = bandlimited_half_table_parallel(kGpsChip, 2e6, kGpsChip / 1000, 500);
  CHECK(s == p);
}

TEST_CASE("band-limited construction validates its arguments") {
  CHECK_THROWS_AS(make_bandlimited_acf(kGpsChip, 0.0, kGpsChip / 1000), std::invalid_argument);
  CHECK_THROWS_AS(make_bandlimited_acf(kGpsChip, -1e6, kGpsChip / 1000), std::invalid_argument);
  CHECK_THROWS_AS(make_bandlimited_acf(kGpsChip, 2e6, kGpsChip / 50), std::invalid_argument);
}

TEST_CASE("shared band-limited model is cached") {
  const auto a = shared_bandlimited_acf(kGpsChip, 4e6);
  const auto b = shared_bandlimited_acf(kGpsChip, 4e6);
  CHECK(a.table().data() == b.table().data());
}
