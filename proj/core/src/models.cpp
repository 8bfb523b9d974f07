#include "kahs/models.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "kahs/errors.hpp"
#include "kahs/rng.hpp"

namespace kahs {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ksparse:
      return "ksparse";
    case ModelKind::exponential:
      return "exponential";
    case ModelKind::powerlaw:
      return "powerlaw";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "ksparse") return ModelKind::ksparse;
  if (name == "exponential" || name == "exp") return ModelKind::exponential;
  if (name == "powerlaw" || name == "power") return ModelKind::powerlaw;
  throw InvalidParameter(fmt::format("unknown model '{}'", name));
}

void ModelSpec::validate() const {
  if (dimension == 0) throw InvalidParameter("model dimension must be >= 1");
  if (!(scale > 0.0)) throw InvalidParameter("model scale R must be > 0");
  switch (kind) {
    case ModelKind::ksparse:
      if (sparsity > dimension) {
        throw InvalidParameter(fmt::format("k = {} exceeds N = {}", sparsity, dimension));
      }
      break;
    case ModelKind::exponential:
      if (!(base > 1.0)) throw InvalidParameter("exponential model needs q > 1");
      break;
    case ModelKind::powerlaw:
      if (!(exponent > 1.0)) throw InvalidParameter("power-law model needs alpha > 1");
      break;
  }
}

std::string ModelSpec::to_config() const {
  return fmt::format("kind={}\nN={}\nk={}\nq={}\nalpha={}\nR={}\nseed={}\n", to_string(kind),
                     dimension, sparsity, base, exponent, scale, seed);
}

namespace {
template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InvalidParameter(fmt::format("bad value '{}' for key '{}'", text, key));
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}
}  // namespace

ModelSpec ModelSpec::from_config(std::string_view text) {
  ModelSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidParameter(fmt::format("expected key=value, got '{}'", line));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "kind") {
      spec.kind = parse_model_kind(value);
    } else if (key == "N") {
      spec.dimension = parse_number<std::size_t>(key, value);
    } else if (key == "k") {
      spec.sparsity = parse_number<std::size_t>(key, value);
    } else if (key == "q") {
      spec.base = parse_number<double>(key, value);
    } else if (key == "alpha") {
      spec.exponent = parse_number<double>(key, value);
    } else if (key == "R") {
      spec.scale = parse_number<double>(key, value);
    } else if (key == "seed") {
      spec.seed = parse_number<std::uint64_t>(key, value);
    } else {
      throw InvalidParameter(fmt::format("unknown model key '{}'", key));
    }
  }
  spec.validate();
  return spec;
}

std::vector<double> ranked_magnitudes(const ModelSpec& spec) {
  spec.validate();
  std::vector<double> mags(spec.dimension);
  switch (spec.kind) {
    case ModelKind::ksparse:
      throw InvalidParameter("k-sparse magnitudes are random, not analytic");
    case ModelKind::exponential:
      for (std::size_t n = 0; n < mags.size(); ++n) {
        mags[n] = spec.scale * std::pow(spec.base, -static_cast<double>(n));
      }
      break;
    case ModelKind::powerlaw:
      for (std::size_t n = 0; n < mags.size(); ++n) {
        mags[n] = spec.scale * std::pow(static_cast<double>(n + 1), -spec.exponent);
      }
      break;
  }
  return mags;
}

std::vector<std::size_t> rank_by_magnitude(std::span<const double> coeffs) {
  std::vector<std::size_t> order(coeffs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(coeffs[a]) > std::abs(coeffs[b]);
  });
  return order;
}

ModelSignal generate(const ModelSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  ModelSignal out;
  out.coefficients.assign(spec.dimension, 0.0);
  auto locations = random_permutation(spec.dimension, rng);

  if (spec.kind == ModelKind::ksparse) {
    for (std::size_t r = 0; r < spec.sparsity; ++r) {
      out.coefficients[locations[r]] = spec.scale * rng.normal();
    }
    out.rank_order = rank_by_magnitude(out.coefficients);
    return out;
  }

  const auto mags = ranked_magnitudes(spec);
  for (std::size_t r = 0; r < spec.dimension; ++r) {
    out.coefficients[locations[r]] = rng.coin() ? mags[r] : -mags[r];
  }
  out.rank_order = std::move(locations);
  return out;
}

SignificantSet significant_set(std::span<const double> coeffs, std::size_t k) {
  if (k > coeffs.size()) {
    throw InvalidParameter(fmt::format("k = {} exceeds length {}", k, coeffs.size()));
  }
  const auto order = rank_by_magnitude(coeffs);
  SignificantSet set;
  for (std::size_t r = 0; r < k; ++r) {
    set.indices.push_back(order[r]);
    set.values.push_back(coeffs[order[r]]);
  }
  return set;
}

std::vector<double> sorted_magnitudes(std::span<const double> coeffs) {
  std::vector<double> mags(coeffs.size());
  std::transform(coeffs.begin(), coeffs.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return mags;
}

namespace {
// All 2^m subset sums, indexed by bit mask.
std::vector<double> subset_sums(std::span<const double> values) {
  std::vector<double> sums(std::size_t{1} << values.size(), 0.0);
  for (std::size_t mask = 1; mask < sums.size(); ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    sums[mask] = sums[mask & (mask - 1)] + values[low];
  }
  return sums;
}

double closest_to(const std::vector<double>& sorted, double target) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), target);
  double best = std::numeric_limits<double>::infinity();
  if (it != sorted.end()) best = std::min(best, std::abs(*it - target));
  if (it != sorted.begin()) best = std::min(best, std::abs(*std::prev(it) - target));
  return best;
}
}  // namespace

double u_min_subset(std::span<const double> values) {
  if (values.empty()) throw InvalidParameter("significant set is empty");
  if (values.size() > 24) {
    throw InvalidParameter(fmt::format("subset enumeration supports k <= 24, got {}", values.size()));
  }
  // Meet in the middle: |A + B| over subset sums of the two halves,
  // excluding the pair where both halves are empty.
  const std::size_t half = values.size() / 2;
  const auto left = subset_sums(values.subspan(0, half));
  auto right = subset_sums(values.subspan(half));
  std::vector<double> right_nonempty(right.begin() + 1, right.end());
  std::sort(right.begin(), right.end());
  std::sort(right_nonempty.begin(), right_nonempty.end());

  double best = closest_to(right_nonempty, 0.0);
  for (std::size_t mask = 1; mask < left.size(); ++mask) {
    best = std::min(best, closest_to(right, -left[mask]));
  }
  return best;
}

double r_tail(std::span<const double> sorted_mags, std::size_t k, std::size_t partition) {
  if (partition == 0) throw InvalidParameter("partition size must be >= 1");
  const std::size_t last_rank = 2 * partition - 1;
  if (last_rank > sorted_mags.size()) {
    throw InvalidParameter(fmt::format("rank 2*Pi-1 = {} exceeds the {} available magnitudes",
                                       last_rank, sorted_mags.size()));
  }
  double r = 0.0;
  for (std::size_t n = k; n < last_rank; ++n) r += sorted_mags[n];
  return r;
}

double r_tail_extended(std::span<const double> sorted_mags, std::size_t k,
                       std::size_t partition) {
  if (partition == 0) throw InvalidParameter("partition size must be >= 1");
  if (k > sorted_mags.size()) {
    throw InvalidParameter(fmt::format("k = {} exceeds the {} available magnitudes", k,
                                       sorted_mags.size()));
  }
  const std::size_t last_rank = std::min(k + 2 * partition - 1, sorted_mags.size());
  double r = 0.0;
  for (std::size_t n = k; n < last_rank; ++n) r += sorted_mags[n];
  return r;
}

bool sufficient_condition_holds(const SignificantSet& significant,
                                std::span<const double> sorted_mags, std::size_t k,
                                std::size_t partition, TailRange range) {
  if (significant.values.size() != k) {
    throw InvalidParameter("significant set size does not match k");
  }
  const double r = range == TailRange::narrow ? r_tail(sorted_mags, k, partition)
                                                 : r_tail_extended(sorted_mags, k, partition);
  return u_min_subset(significant.values) > r;
}

double zeta(double s) {
  if (!(s > 1.0)) throw InvalidParameter("zeta needs s > 1");
  // Direct series to M = 10^6 (Kahan, smallest terms first), then the
  // Euler-Maclaurin tail sum_{n>M} n^-s
  //   = M^(1-s)/(s-1) - M^-s/2 + s M^(-s-1)/12 + O(s^3 M^(-s-3)).
  constexpr std::size_t kTerms = 1'000'000;
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t n = kTerms; n >= 1; --n) {
    const double term = std::pow(static_cast<double>(n), -s) - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  const double m = static_cast<double>(kTerms);
  const double tail = std::pow(m, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(m, -s) +
                      s * std::pow(m, -s - 1.0) / 12.0;
  return sum + tail;
}

double alpha_star() {
  static const double root = [] {
    double lo = 1.5;  // zeta(1.5) - 1 > 1
    double hi = 2.0;  // zeta(2) - 1 < 1
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (lo + hi);
      const double f = zeta(mid) - 2.0;
      if (std::abs(f) < 1e-12 || hi - lo < 1e-15) break;
      (f > 0.0 ? lo : hi) = mid;
    }
    return mid;
  }();
  return root;
}

double energy_fraction_top1(double alpha, std::size_t n) {
  if (n == 0) throw InvalidParameter("dimension must be >= 1");
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be > 0");
  double total = 0.0;
  for (std::size_t i = n; i >= 1; --i) total += std::pow(static_cast<double>(i), -2.0 * alpha);
  return 1.0 / total;
}

double energy_fraction_top1_limit(double alpha) {
  if (!(alpha > 1.0)) throw InvalidParameter("alpha must be > 1");
  return 1.0 / zeta(2.0 * alpha);
}

double partition_bound(double alpha, double partition) {
  if (!(alpha > 1.0)) throw InvalidParameter("alpha must be > 1");
  const double e = 1.0 - alpha;
  return std::pow(2.0, -alpha) +
         (std::pow(2.0 * partition - 0.5, e) - std::pow(2.5, e)) / e;
}

PartitionLimit max_partition_size(double alpha, int max_level) {
  if (!(alpha > 1.0)) throw InvalidParameter("alpha must be > 1");
  PartitionLimit limit;
  if (!(partition_bound(alpha, 1.0) < 1.0)) {
    limit.satisfied = false;
    return limit;
  }
  for (int level = 1; level <= max_level; ++level) {
    const double partition = std::ldexp(1.0, level);
    if (!(partition_bound(alpha, partition) < 1.0)) return limit;
    limit.partition = std::uint64_t{1} << level;
    limit.level = level;
  }
  // Pi -> infinity limit of the bound.
  limit.unbounded = std::pow(2.0, -alpha) + std::pow(2.5, 1.0 - alpha) / (alpha - 1.0) < 1.0;
  return limit;
}

}  // namespace kahs
