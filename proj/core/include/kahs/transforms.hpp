#pragma once

// Analysis/synthesis transform pairs.
//
// A transform maps a signal x to coefficients a = analyze(x); synthesize is
// its exact inverse. The n-th analysis functional psi_n is the n-th row of
// the analysis operator, so a_n = <x, psi_n>. analyze_adjoint applies the
// transposed analysis operator, which turns a coefficient-domain indicator
// into the corresponding sum of analysis functionals (a sensing vector).
//
// 2D kinds take images in row-major order. Coefficient layout for the
// wavelet kinds: approximation band first, then for each level from coarse
// to fine the three detail bands (top-right, bottom-left, bottom-right
// quadrant of the Mallat pyramid), every band in row-major order.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace kahs {

enum class TransformKind { identity, haar2d, cdf97_2d };

std::string_view to_string(TransformKind kind);
/// Accepts "identity", "haar"/"haar2d", "cdf97"/"cdf97_2d".
TransformKind parse_transform_kind(std::string_view name);

class Transform {
 public:
  virtual ~Transform() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> analyze(std::span<const double> signal) const = 0;
  virtual std::vector<double> synthesize(std::span<const double> coeffs) const = 0;
  virtual std::vector<double> analyze_adjoint(std::span<const double> coeffs) const = 0;
};

class TransformPair final : public Transform {
 public:
  static TransformPair identity(std::size_t n);
  /// levels < 0 selects the full depth log2(side).
  static TransformPair haar2d(std::size_t side, int levels = -1);
  static TransformPair cdf97_2d(std::size_t side, int levels = -1);

  std::size_t dimension() const override { return dimension_; }
  std::vector<double> analyze(std::span<const double> signal) const override;
  std::vector<double> synthesize(std::span<const double> coeffs) const override;
  std::vector<double> analyze_adjoint(std::span<const double> coeffs) const override;

  TransformKind kind() const noexcept { return kind_; }
  /// Side length for 2D kinds, 0 for identity.
  std::size_t side() const noexcept { return side_; }
  int levels() const noexcept { return levels_; }
  bool orthogonal() const noexcept { return kind_ != TransformKind::cdf97_2d; }

 private:
  TransformPair(TransformKind kind, std::size_t dimension, std::size_t side, int levels);

  TransformKind kind_;
  std::size_t dimension_;
  std::size_t side_;
  int levels_;
  // layout_[k] is the pyramid position (row-major pixel index) of coefficient k.
  std::shared_ptr<const std::vector<std::uint32_t>> layout_;
};

TransformPair identity_pair(std::size_t n);
TransformPair haar2d_pair(std::size_t side, int levels = -1);
TransformPair cdf97_2d_pair(std::size_t side, int levels = -1);

/// identity: n = side * side; wavelets: square image of the given side.
TransformPair make_transform(TransformKind kind, std::size_t side, int levels = -1);

/// Wraps a transform and reorders its coefficients: coefficient j of the
/// wrapper is coefficient perm[j] of the inner transform.
class PermutedTransform final : public Transform {
 public:
  PermutedTransform(TransformPair inner, std::vector<std::size_t> perm);

  std::size_t dimension() const override { return inner_.dimension(); }
  std::vector<double> analyze(std::span<const double> signal) const override;
  std::vector<double> synthesize(std::span<const double> coeffs) const override;
  std::vector<double> analyze_adjoint(std::span<const double> coeffs) const override;

  /// b[j] = a[perm[j]]
  std::vector<double> permute(std::span<const double> inner_coeffs) const;
  /// Inverse of permute.
  std::vector<double> unpermute(std::span<const double> coeffs) const;

  const TransformPair& inner() const noexcept { return inner_; }
  const std::vector<std::size_t>& perm() const noexcept { return perm_; }
  const std::vector<std::size_t>& inverse_perm() const noexcept { return inverse_perm_; }

 private:
  TransformPair inner_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> inverse_perm_;
};

/// Uniform leaf shuffle drawn by Fisher-Yates from `seed`.
PermutedTransform permuted(TransformPair inner, std::uint64_t seed);

namespace cdf97 {
// JPEG 2000 irreversible 9/7 lifting factorization.
inline constexpr double kAlpha = -1.586134342059924;
inline constexpr double kBeta = -0.052980118572961;
inline constexpr double kGamma = 0.882911075530934;
inline constexpr double kDelta = 0.443506852043971;
// Low band is multiplied, high band divided; the low-pass DC gain is sqrt(2).
inline constexpr double kZeta = 1.149604398860241;
}  // namespace cdf97

}  // namespace kahs
