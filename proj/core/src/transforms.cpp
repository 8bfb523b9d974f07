#include "kahs/transforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "kahs/errors.hpp"
#include "kahs/rng.hpp"

namespace kahs {
namespace {

enum class Direction { forward, inverse, adjoint };

// One-level 1D kernels on an even-length line. The forward direction maps
// x to [low | high]; inverse and adjoint take [low | high] back to x.

void haar_line(std::span<double> line, std::span<double> scratch, Direction dir) {
  const std::size_t half = line.size() / 2;
  constexpr double r = std::numbers::sqrt2 / 2.0;
  if (dir == Direction::forward) {
    for (std::size_t i = 0; i < half; ++i) {
      scratch[i] = (line[2 * i] + line[2 * i + 1]) * r;
      scratch[half + i] = (line[2 * i] - line[2 * i + 1]) * r;
    }
  } else {
    // orthonormal: adjoint == inverse
    for (std::size_t i = 0; i < half; ++i) {
      scratch[2 * i] = (line[i] + line[half + i]) * r;
      scratch[2 * i + 1] = (line[i] - line[half + i]) * r;
    }
  }
  std::copy_n(scratch.begin(), line.size(), line.begin());
}

// Lifting steps on split halves s (even samples) and d (odd samples) with
// whole-sample symmetric extension: s[m] mirrors to s[m-1], d[-1] to d[0].

void predict(std::span<double> s, std::span<double> d, double c) {
  const std::size_t m = s.size();
  for (std::size_t i = 0; i + 1 < m; ++i) d[i] += c * (s[i] + s[i + 1]);
  d[m - 1] += c * (2.0 * s[m - 1]);
}

void update(std::span<double> s, std::span<double> d, double c) {
  const std::size_t m = s.size();
  s[0] += c * (2.0 * d[0]);
  for (std::size_t i = 1; i < m; ++i) s[i] += c * (d[i - 1] + d[i]);
}

void predict_transposed(std::span<double> s, std::span<const double> d, double c) {
  const std::size_t m = s.size();
  for (std::size_t i = 0; i < m; ++i) {
    s[i] += c * d[i];
    s[std::min(i + 1, m - 1)] += c * d[i];
  }
}

void update_transposed(std::span<const double> s, std::span<double> d, double c) {
  const std::size_t m = s.size();
  for (std::size_t i = 0; i < m; ++i) {
    d[i] += c * s[i];
    d[i == 0 ? 0 : i - 1] += c * s[i];
  }
}

void cdf97_line(std::span<double> line, std::span<double> scratch, Direction dir) {
  using namespace cdf97;
  const std::size_t half = line.size() / 2;
  std::span<double> s = scratch.subspan(0, half);
  std::span<double> d = scratch.subspan(half, half);

  switch (dir) {
    case Direction::forward:
      for (std::size_t i = 0; i < half; ++i) {
        s[i] = line[2 * i];
        d[i] = line[2 * i + 1];
      }
      predict(s, d, kAlpha);
      update(s, d, kBeta);
      predict(s, d, kGamma);
      update(s, d, kDelta);
      for (std::size_t i = 0; i < half; ++i) {
        line[i] = s[i] * kZeta;
        line[half + i] = d[i] / kZeta;
      }
      return;
    case Direction::inverse:
      for (std::size_t i = 0; i < half; ++i) {
        s[i] = line[i] / kZeta;
        d[i] = line[half + i] * kZeta;
      }
      update(s, d, -kDelta);
      predict(s, d, -kGamma);
      update(s, d, -kBeta);
      predict(s, d, -kAlpha);
      break;
    case Direction::adjoint:
      for (std::size_t i = 0; i < half; ++i) {
        s[i] = line[i] * kZeta;
        d[i] = line[half + i] / kZeta;
      }
      update_transposed(s, d, kDelta);
      predict_transposed(s, d, kGamma);
      update_transposed(s, d, kBeta);
      predict_transposed(s, d, kAlpha);
      break;
  }
  for (std::size_t i = 0; i < half; ++i) {
    line[2 * i] = s[i];
    line[2 * i + 1] = d[i];
  }
}

using LineKernel = void (*)(std::span<double>, std::span<double>, Direction);

void rows(std::vector<double>& img, std::size_t side, std::size_t block, LineKernel kernel,
          Direction dir, std::vector<double>& scratch) {
  for (std::size_t r = 0; r < block; ++r) {
    kernel(std::span<double>(img).subspan(r * side, block), scratch, dir);
  }
}

void columns(std::vector<double>& img, std::size_t side, std::size_t block, LineKernel kernel,
             Direction dir, std::vector<double>& line, std::vector<double>& scratch) {
  std::span<double> col(line.data(), block);
  for (std::size_t c = 0; c < block; ++c) {
    for (std::size_t r = 0; r < block; ++r) col[r] = img[r * side + c];
    kernel(col, scratch, dir);
    for (std::size_t r = 0; r < block; ++r) img[r * side + c] = col[r];
  }
}

// Mallat pyramid: each level transforms the rows then the columns of the
// current approximation block. Inverse and adjoint run coarse to fine and
// undo columns before rows.
void pyramid(std::vector<double>& img, std::size_t side, int levels, LineKernel kernel,
             Direction dir) {
  std::vector<double> scratch(side);
  std::vector<double> line(side);
  if (dir == Direction::forward) {
    for (int lv = 0; lv < levels; ++lv) {
      const std::size_t block = side >> lv;
      rows(img, side, block, kernel, dir, scratch);
      columns(img, side, block, kernel, dir, line, scratch);
    }
  } else {
    for (int lv = levels - 1; lv >= 0; --lv) {
      const std::size_t block = side >> lv;
      columns(img, side, block, kernel, dir, line, scratch);
      rows(img, side, block, kernel, dir, scratch);
    }
  }
}

std::vector<std::uint32_t> band_layout(std::size_t side, int levels) {
  std::vector<std::uint32_t> layout;
  layout.reserve(side * side);
  auto append_band = [&](std::size_t row0, std::size_t col0, std::size_t size) {
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        layout.push_back(static_cast<std::uint32_t>((row0 + r) * side + col0 + c));
      }
    }
  };
  append_band(0, 0, side >> levels);
  for (int lv = levels - 1; lv >= 0; --lv) {
    const std::size_t h = side >> (lv + 1);
    append_band(0, h, h);
    append_band(h, 0, h);
    append_band(h, h, h);
  }
  return layout;
}

void check_size(std::span<const double> v, std::size_t n) {
  if (v.size() != n) {
    throw DimensionError("transform expects length " + std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity:
      return "identity";
    case TransformKind::haar2d:
      return "haar";
    case TransformKind::cdf97_2d:
      return "cdf97";
  }
  return "unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  if (name == "identity") return TransformKind::identity;
  if (name == "haar" || name == "haar2d") return TransformKind::haar2d;
  if (name == "cdf97" || name == "cdf97_2d") return TransformKind::cdf97_2d;
  throw InvalidParameter("unknown basis '" + std::string(name) + "'");
}

TransformPair::TransformPair(TransformKind kind, std::size_t dimension, std::size_t side,
                             int levels)
    : kind_(kind), dimension_(dimension), side_(side), levels_(levels) {
  if (kind != TransformKind::identity) {
    layout_ = std::make_shared<const std::vector<std::uint32_t>>(band_layout(side, levels));
  }
}

TransformPair TransformPair::identity(std::size_t n) {
  if (n == 0) throw DimensionError("identity transform needs n >= 1");
  return TransformPair(TransformKind::identity, n, 0, 0);
}

namespace {
int checked_levels(std::size_t side, int levels) {
  if (side < 2 || !std::has_single_bit(side)) {
    throw DimensionError("wavelet side must be a power of two >= 2, got " + std::to_string(side));
  }
  if (side > (std::size_t{1} << 16)) throw DimensionError("wavelet side too large");
  const int depth = std::countr_zero(side);
  if (levels < 0) return depth;
  if (levels == 0 || levels > depth) {
    throw DimensionError("levels must be in [1, " + std::to_string(depth) + "], got " +
                         std::to_string(levels));
  }
  return levels;
}
}  // namespace

TransformPair TransformPair::haar2d(std::size_t side, int levels) {
  const int lv = checked_levels(side, levels);
  return TransformPair(TransformKind::haar2d, side * side, side, lv);
}

TransformPair TransformPair::cdf97_2d(std::size_t side, int levels) {
  const int lv = checked_levels(side, levels);
  return TransformPair(TransformKind::cdf97_2d, side * side, side, lv);
}

std::vector<double> TransformPair::analyze(std::span<const double> signal) const {
  check_size(signal, dimension_);
  if (kind_ == TransformKind::identity) return {signal.begin(), signal.end()};
  std::vector<double> work(signal.begin(), signal.end());
  pyramid(work, side_, levels_, kind_ == TransformKind::haar2d ? haar_line : cdf97_line,
          Direction::forward);
  std::vector<double> coeffs(dimension_);
  const auto& layout = *layout_;
  for (std::size_t k = 0; k < dimension_; ++k) coeffs[k] = work[layout[k]];
  return coeffs;
}

std::vector<double> TransformPair::synthesize(std::span<const double> coeffs) const {
  check_size(coeffs, dimension_);
  if (kind_ == TransformKind::identity) return {coeffs.begin(), coeffs.end()};
  std::vector<double> work(dimension_);
  const auto& layout = *layout_;
  for (std::size_t k = 0; k < dimension_; ++k) work[layout[k]] = coeffs[k];
  pyramid(work, side_, levels_, kind_ == TransformKind::haar2d ? haar_line : cdf97_line,
          Direction::inverse);
  return work;
}

std::vector<double> TransformPair::analyze_adjoint(std::span<const double> coeffs) const {
  check_size(coeffs, dimension_);
  if (kind_ == TransformKind::identity) return {coeffs.begin(), coeffs.end()};
  std::vector<double> work(dimension_);
  const auto& layout = *layout_;
  for (std::size_t k = 0; k < dimension_; ++k) work[layout[k]] = coeffs[k];
  pyramid(work, side_, levels_, kind_ == TransformKind::haar2d ? haar_line : cdf97_line,
          Direction::adjoint);
  return work;
}

TransformPair identity_pair(std::size_t n) { return TransformPair::identity(n); }
TransformPair haar2d_pair(std::size_t side, int levels) {
  return TransformPair::haar2d(side, levels);
}
TransformPair cdf97_2d_pair(std::size_t side, int levels) {
  return TransformPair::cdf97_2d(side, levels);
}

TransformPair make_transform(TransformKind kind, std::size_t side, int levels) {
  switch (kind) {
    case TransformKind::identity:
      return TransformPair::identity(side * side);
    case TransformKind::haar2d:
      return TransformPair::haar2d(side, levels);
    case TransformKind::cdf97_2d:
      return TransformPair::cdf97_2d(side, levels);
  }
  throw InvalidParameter("unknown transform kind");
}

PermutedTransform::PermutedTransform(TransformPair inner, std::vector<std::size_t> perm)
    : inner_(std::move(inner)), perm_(std::move(perm)), inverse_perm_(perm_.size()) {
  const std::size_t n = inner_.dimension();
  if (perm_.size() != n) throw DimensionError("permutation length does not match transform");
  std::vector<bool> seen(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (perm_[j] >= n || seen[perm_[j]]) throw InvalidParameter("not a permutation");
    seen[perm_[j]] = true;
    inverse_perm_[perm_[j]] = j;
  }
}

std::vector<double> PermutedTransform::permute(std::span<const double> inner_coeffs) const {
  check_size(inner_coeffs, perm_.size());
  std::vector<double> out(perm_.size());
  for (std::size_t j = 0; j < perm_.size(); ++j) out[j] = inner_coeffs[perm_[j]];
  return out;
}

std::vector<double> PermutedTransform::unpermute(std::span<const double> coeffs) const {
  check_size(coeffs, perm_.size());
  std::vector<double> out(perm_.size());
  for (std::size_t j = 0; j < perm_.size(); ++j) out[perm_[j]] = coeffs[j];
  return out;
}

std::vector<double> PermutedTransform::analyze(std::span<const double> signal) const {
  return permute(inner_.analyze(signal));
}

std::vector<double> PermutedTransform::synthesize(std::span<const double> coeffs) const {
  return inner_.synthesize(unpermute(coeffs));
}

std::vector<double> PermutedTransform::analyze_adjoint(std::span<const double> coeffs) const {
  return inner_.analyze_adjoint(unpermute(coeffs));
}

PermutedTransform permuted(TransformPair inner, std::uint64_t seed) {
  Rng rng(seed);
  auto perm = random_permutation(inner.dimension(), rng);
  return PermutedTransform(std::move(inner), std::move(perm));
}

}  // namespace kahs
