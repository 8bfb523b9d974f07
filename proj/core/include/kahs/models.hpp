#pragma once

// Synthetic coefficient models and the collection-guarantee toolkit.
//
// Ranks are 1-based in the model formulas (rank 1 is the largest magnitude)
// and 0-based in containers: rank_order[0] holds the location of rank 1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kahs {

enum class ModelKind { ksparse, exponential, powerlaw };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::ksparse;
  std::size_t dimension = 1024;  // N
  std::size_t sparsity = 4;      // k, k-sparse model only
  double base = 2.0;             // q > 1, exponential model
  double exponent = 2.0;         // alpha > 1, power-law model
  double scale = 1.0;            // R > 0
  std::uint64_t seed = 0;

  /// Throws InvalidParameter when a field is outside its domain.
  void validate() const;

  /// Flat `key=value` lines: kind, N, k, q, alpha, R, seed.
  std::string to_config() const;
  static ModelSpec from_config(std::string_view text);
};

struct ModelSignal {
  std::vector<double> coefficients;
  std::vector<std::size_t> rank_order;  // location of each rank, largest first
};

/// Analytic magnitude profile R q^(1-n) or R n^-alpha for ranks 1..N, before
/// any sign or location shuffle. Not defined for the k-sparse model.
std::vector<double> ranked_magnitudes(const ModelSpec& spec);

/// Deterministic in spec.seed. k-sparse: k standard Gaussian values at
/// uniform locations. Exponential/power law: the analytic magnitudes with
/// uniform random locations and fair-coin signs.
ModelSignal generate(const ModelSpec& spec);

/// Location order by descending magnitude, ties to the smaller index.
std::vector<std::size_t> rank_by_magnitude(std::span<const double> coeffs);

struct SignificantSet {
  std::vector<std::size_t> indices;
  std::vector<double> values;
};

/// The k largest-magnitude coefficients.
SignificantSet significant_set(std::span<const double> coeffs, std::size_t k);

/// Magnitudes sorted in descending order.
std::vector<double> sorted_magnitudes(std::span<const double> coeffs);

/// Smallest |sum| over the nonempty subsets of `values` (at most 24 values).
double u_min_subset(std::span<const double> values);

/// Sum of the sorted magnitudes at ranks k+1 .. 2*partition-1.
double r_tail(std::span<const double> sorted_mags, std::size_t k, std::size_t partition);

/// Sum of the sorted magnitudes at ranks k+1 .. k+2*partition-1 (ranks past
/// the end count as zero). The two competing measurements in the
/// sufficiency argument hold up to 2*partition-1 non-significant
/// coefficients, so this is the tail the argument actually bounds.
double r_tail_extended(std::span<const double> sorted_mags, std::size_t k, std::size_t partition);

enum class TailRange {
  narrow,    // r_tail
  extended,  // r_tail_extended
};

/// u > r. With the extended tail this is sufficient for K-AHS (K >= k) to
/// collect every significant coefficient; the narrow tail is shorter by
/// k terms and admits counterexamples.
bool sufficient_condition_holds(const SignificantSet& significant,
                                std::span<const double> sorted_mags, std::size_t k,
                                std::size_t partition, TailRange range = TailRange::narrow);

/// Riemann zeta for s > 1, with absolute error below 1e-12.
double zeta(double s);

/// Root of zeta(alpha) = 2 (about 1.7286).
double alpha_star();

/// Energy share of the largest coefficient of a power-law signal of length n:
/// 1 / sum_{i<=n} i^(-2 alpha).
double energy_fraction_top1(double alpha, std::size_t n);
/// n -> infinity limit 1 / zeta(2 alpha). Requires alpha > 1.
double energy_fraction_top1_limit(double alpha);

/// Integral upper bound on the tail r for k = 1 and partition size Pi:
/// 2^-alpha + ((2 Pi - 1/2)^(1-alpha) - (5/2)^(1-alpha)) / (1 - alpha).
double partition_bound(double alpha, double partition);

struct PartitionLimit {
  std::uint64_t partition = 1;
  int level = 0;
  bool satisfied = true;   // false: not even Pi = 1 keeps the bound below 1
  bool unbounded = false;  // bound stays below 1 for every Pi; partition is the search cap
};

/// Largest power-of-two partition whose bound is below 1, searched up to
/// 2^max_level.
PartitionLimit max_partition_size(double alpha, int max_level = 40);

}  // namespace kahs
