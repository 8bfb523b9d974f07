#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "kahs/errors.hpp"
#include "kahs/transforms.hpp"
#include "test_util.hpp"

using namespace kahs;
using kahs::test::dot;
using kahs::test::max_abs_diff;
using kahs::test::norm2;
using kahs::test::random_vector;

namespace {

std::vector<TransformPair> all_pairs() {
  return {identity_pair(64),  haar2d_pair(8),     haar2d_pair(16, 2),
          cdf97_2d_pair(8),   cdf97_2d_pair(16, 1), cdf97_2d_pair(32, 3)};
}

// Laurent polynomial: exponent -> coefficient.
using Laurent = std::map<int, double>;

Laurent operator*(const Laurent& a, const Laurent& b) {
  Laurent out;
  for (auto [ea, ca] : a)
    for (auto [eb, cb] : b) out[ea + eb] += ca * cb;
  return out;
}

Laurent operator+(Laurent a, const Laurent& b) {
  for (auto [e, c] : b) a[e] += c;
  return a;
}

Laurent scaled(Laurent a, double s) {
  for (auto& [e, c] : a) c *= s;
  return a;
}

// Analysis low-pass taps h[-4..4] from the polyphase lifting factorization:
// predict multiplies by c(1 + z), update by c(1 + z^-1). The low output is
// a(z) E(z) + b(z) O(z); even taps come from a, odd taps from b.
std::map<int, double> lowpass_taps_from_lifting() {
  using namespace cdf97;
  Laurent s_even{{0, 1.0}}, s_odd;  // s = s_even * E + s_odd * O
  Laurent d_even, d_odd{{0, 1.0}};
  auto predict = [&](double c) {
    const Laurent p{{0, c}, {1, c}};
    d_even = d_even + p * s_even;
    d_odd = d_odd + p * s_odd;
  };
  auto update = [&](double c) {
    const Laurent u{{0, c}, {-1, c}};
    s_even = s_even + u * d_even;
    s_odd = s_odd + u * d_odd;
  };
  predict(kAlpha);
  update(kBeta);
  predict(kGamma);
  update(kDelta);
  s_even = scaled(s_even, kZeta);
  s_odd = scaled(s_odd, kZeta);

  std::map<int, double> h;
  for (auto [e, c] : s_even) h[-2 * e] += c;     // impulse at 2m -> s_{m+j} = a_{-j} = h[-2j]
  for (auto [e, c] : s_odd) h[1 + 2 * e] += c;  // impulse at 2m+1 -> s_{m+j} = b_{-j} = h[1-2j]
  return h;
}

}  // namespace

TEST_CASE("identity pair is the identity map") {
  const auto id4 = identity_pair(4);
  CHECK(id4.analyze(std::vector<double>{3, 0, 0, 0}) == std::vector<double>{3, 0, 0, 0});
  CHECK(identity_pair(2).synthesize(std::vector<double>{1, 2}) == std::vector<double>{1, 2});
  const auto id16 = identity_pair(16);
  const auto x = random_vector(16, 5);
  CHECK(max_abs_diff(id16.synthesize(id16.analyze(x)), x) == 0.0);
  CHECK_THROWS_AS(identity_pair(0), DimensionError);
}

TEST_CASE("haar2d elementary responses") {
  const auto haar = haar2d_pair(2);
  SUBCASE("constant 2x2 image keeps only the approximation coefficient 2c") {
    const double c = 3.5;
    const auto a = haar.analyze(std::vector<double>(4, c));
    CHECK(a[0] == doctest::Approx(2 * c).epsilon(1e-15));
    CHECK(std::abs(a[1]) < 1e-15);
    CHECK(std::abs(a[2]) < 1e-15);
    CHECK(std::abs(a[3]) < 1e-15);
  }
  SUBCASE("rows [1,-1] map onto the horizontal detail") {
    // each row -> [0, sqrt2]; the detail column [sqrt2, sqrt2] -> [2, 0]
    const auto a = haar.analyze(std::vector<double>{1, -1, 1, -1});
    CHECK(std::abs(a[0]) < 1e-15);
    CHECK(a[1] == doctest::Approx(2.0));
    CHECK(std::abs(a[2]) < 1e-15);
    CHECK(std::abs(a[3]) < 1e-15);
  }
  SUBCASE("constant image of side 8: approximation = side * c") {
    const auto h8 = haar2d_pair(8);
    const auto a = h8.analyze(std::vector<double>(64, 1.0));
    CHECK(a[0] == doctest::Approx(8.0));
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(std::abs(a[i]) < 1e-12);
  }
}

TEST_CASE("haar2d preserves energy") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = random_vector(64, seed);
    const auto a = haar2d_pair(8).analyze(x);
    CHECK(norm2(a) / norm2(x) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto x = random_vector(256, 99);
  CHECK(norm2(haar2d_pair(16, 2).analyze(x)) / norm2(x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perfect reconstruction and linearity for every kind") {
  for (const auto& t : all_pairs()) {
    CAPTURE(to_string(t.kind()));
    CAPTURE(t.levels());
    const auto x = random_vector(t.dimension(), 11, 50.0);
    const auto y = random_vector(t.dimension(), 12, 50.0);
    CHECK(max_abs_diff(t.synthesize(t.analyze(x)), x) < 1e-9);

    std::vector<double> combo(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) combo[i] = 2.5 * x[i] - 0.75 * y[i];
    const auto ax = t.analyze(x);
    const auto ay = t.analyze(y);
    std::vector<double> expected(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) expected[i] = 2.5 * ax[i] - 0.75 * ay[i];
    CHECK(max_abs_diff(t.analyze(combo), expected) < 1e-9);
  }
}

TEST_CASE("analyze_adjoint is the transpose of analyze") {
  for (const auto& t : all_pairs()) {
    CAPTURE(to_string(t.kind()));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto x = random_vector(t.dimension(), 100 + seed);
      const auto y = random_vector(t.dimension(), 200 + seed);
      const double lhs = dot(t.analyze(x), y);
      const double rhs = dot(x, t.analyze_adjoint(y));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("cdf97 round trip on a 64x64 image") {
  const auto t = cdf97_2d_pair(64);
  CHECK(t.levels() == 6);
  const auto x = random_vector(64 * 64, 3, 80.0);
  CHECK(max_abs_diff(t.synthesize(t.analyze(x)), x) < 1e-9);
}

TEST_CASE("cdf97 analysis high-pass annihilates constants") {
  const double c = 7.25;
  const auto t = cdf97_2d_pair(16, 1);
  const auto a = t.analyze(std::vector<double>(256, c));
  // approximation band is the first 8x8 block; the low-pass DC gain is sqrt(2) per axis
  for (std::size_t i = 0; i < 64; ++i) CHECK(a[i] == doctest::Approx(2.0 * c).epsilon(1e-12));
  for (std::size_t i = 64; i < a.size(); ++i) CHECK(std::abs(a[i]) < 1e-12);
}

TEST_CASE("cdf97 low-pass impulse response matches the 9-tap analysis filter") {
  const auto h = lowpass_taps_from_lifting();
  // Published JPEG 2000 9/7 analysis low-pass (unit DC gain); ours is scaled by sqrt(2).
  const double published[5] = {0.602949018236360, 0.266864118442875, -0.078223266528990,
                               -0.016864118442875, 0.026748757410810};
  for (int k = -4; k <= 4; ++k) {
    CAPTURE(k);
    CHECK(h.at(k) == doctest::Approx(std::numbers::sqrt2 * published[std::abs(k)]).epsilon(1e-9));
  }
  for (auto [k, v] : h) {
    if (std::abs(k) > 4) CHECK(std::abs(v) < 1e-15);
  }

  // 2D, one level: the approximation band of an impulse is the outer
  // product of the 1D low-pass responses along rows and columns.
  constexpr std::size_t side = 32;
  const auto t = cdf97_2d_pair(side, 1);
  for (auto [r0, c0] : {std::pair<int, int>{16, 16}, {16, 17}, {15, 12}}) {
    std::vector<double> img(side * side, 0.0);
    img[static_cast<std::size_t>(r0) * side + static_cast<std::size_t>(c0)] = 1.0;
    const auto a = t.analyze(img);
    auto tap = [&](int k) { return std::abs(k) <= 4 ? h.at(k) : 0.0; };
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        const double expected = tap(r0 - 2 * i) * tap(c0 - 2 * j);
        CHECK(a[static_cast<std::size_t>(i * 16 + j)] == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("cdf97 analysis and synthesis operators differ") {
  const auto t = cdf97_2d_pair(16, 2);
  std::vector<double> e(256, 0.0);
  e[70] = 1.0;
  // orthogonal pairs have synthesize == analyze_adjoint; biorthogonal ones do not
  CHECK(max_abs_diff(t.synthesize(e), t.analyze_adjoint(e)) > 1e-3);
  const auto haar = haar2d_pair(16, 2);
  CHECK(max_abs_diff(haar.synthesize(e), haar.analyze_adjoint(e)) < 1e-15);
  CHECK_FALSE(t.orthogonal());
  CHECK(haar.orthogonal());
}

TEST_CASE("wavelet shape errors") {
  CHECK_THROWS_AS(haar2d_pair(12), DimensionError);
  CHECK_THROWS_AS(haar2d_pair(1), DimensionError);
  CHECK_THROWS_AS(cdf97_2d_pair(6, 1), DimensionError);
  CHECK_THROWS_AS(cdf97_2d_pair(16, 5), DimensionError);
  CHECK_THROWS_AS(cdf97_2d_pair(16, 0), DimensionError);
  CHECK_NOTHROW(cdf97_2d_pair(16, 4));
  CHECK_THROWS_AS(haar2d_pair(8).analyze(std::vector<double>(63)), DimensionError);
  CHECK_THROWS_AS(parse_transform_kind("dct"), InvalidParameter);
  CHECK(parse_transform_kind("cdf97") == TransformKind::cdf97_2d);
  CHECK(parse_transform_kind("haar") == TransformKind::haar2d);
}

TEST_CASE("permuted transform") {
  SUBCASE("same seed gives the same permutation") {
    const auto a = permuted(haar2d_pair(8), 42);
    const auto b = permuted(haar2d_pair(8), 42);
    const auto c = permuted(haar2d_pair(8), 43);
    CHECK(a.perm() == b.perm());
    CHECK(a.perm() != c.perm());
  }
  SUBCASE("perm and inverse_perm compose to the identity") {
    const auto p = permuted(identity_pair(4), 7);
    for (std::size_t j = 0; j < 4; ++j) CHECK(p.inverse_perm()[p.perm()[j]] == j);
    const std::vector<double> a{1, 2, 3, 4};
    CHECK(p.unpermute(p.permute(a)) == a);
  }
  SUBCASE("round trip through a permuted cdf97, N = 256") {
    const auto p = permuted(cdf97_2d_pair(16), 9);
    const auto x = random_vector(256, 10, 30.0);
    CHECK(max_abs_diff(p.synthesize(p.analyze(x)), x) < 1e-9);
  }
  SUBCASE("only the coefficient order changes") {
    const auto inner = cdf97_2d_pair(16);
    const auto p = permuted(inner, 5);
    const auto x = random_vector(256, 6);
    auto a = inner.analyze(x);
    auto b = p.analyze(x);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  SUBCASE("adjoint stays the transpose") {
    const auto p = permuted(cdf97_2d_pair(16), 8);
    const auto x = random_vector(256, 1);
    const auto y = random_vector(256, 2);
    CHECK(dot(p.analyze(x), y) == doctest::Approx(dot(x, p.analyze_adjoint(y))).epsilon(1e-12));
  }
  SUBCASE("rejects non-permutations") {
    CHECK_THROWS_AS(PermutedTransform(identity_pair(3), {0, 0, 1}), InvalidParameter);
    CHECK_THROWS_AS(PermutedTransform(identity_pair(3), {0, 1}), DimensionError);
  }
}
