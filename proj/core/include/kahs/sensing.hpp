#pragma once

// Adaptive hierarchical sensing (K-AHS).
//
// The sensing tree over a padded dimension P (a power of two) has levels
// 0..log2(P). Node (l, n) covers the coefficient range [n * 2^l, (n+1) * 2^l)
// and its sensing vector is the sum of the analysis functionals in that
// range, so a measurement returns the sum of those coefficients. Indices
// are 0-based everywhere.
//
// The sensing loop measures every node of the initial level L, then for
// l = L..1 keeps the K measurements of largest magnitude and measures both
// children of each. The 2K observed leaves form the estimate.

#include <atomic>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kahs/transforms.hpp"

namespace kahs {

struct NodeId {
  int level = 0;
  std::size_t index = 0;

  std::size_t width() const noexcept { return std::size_t{1} << level; }
  std::pair<NodeId, NodeId> children() const noexcept {
    return {{level - 1, 2 * index}, {level - 1, 2 * index + 1}};
  }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// Half-open coefficient range [begin, end).
struct CoefficientRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const CoefficientRange&, const CoefficientRange&) = default;
};

CoefficientRange coefficient_range(NodeId node) noexcept;

/// Smallest power of two >= n.
std::size_t padded_dimension(std::size_t n);
/// Copies `coeffs` and appends zeros up to `padded`.
std::vector<double> pad_coefficients(std::span<const double> coeffs, std::size_t padded);

/// L = log2(P) - floor(log2 K) - 2. Throws InvalidSparsity unless 1 <= K < P/4.
int initial_level(std::size_t padded, std::size_t sparsity);
/// Exact measurement count P * 2^-L + 2KL.
std::size_t measurement_count(std::size_t padded, std::size_t sparsity);
/// Upper bound 2K log2(P/K); attained iff K is a power of two.
double measurement_bound(std::size_t padded, std::size_t sparsity);
/// Largest K whose measurement count fits `budget`; InvalidParameter if none.
std::size_t k_for_budget(std::size_t padded, std::size_t budget);

struct SensingConfig {
  std::size_t dimension = 0;
  std::size_t padded_dimension = 0;
  std::size_t sparsity = 0;
  int initial_level = 0;

  static SensingConfig make(std::size_t dimension, std::size_t sparsity);
  std::size_t measurements() const { return measurement_count(padded_dimension, sparsity); }
};

/// The only channel through which sensing touches a signal. measure() is
/// safe to call concurrently; the query counter is exact.
class MeasurementOracle {
 public:
  virtual ~MeasurementOracle() = default;

  double measure(NodeId node) {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return do_measure(node);
  }
  std::size_t queries() const noexcept { return queries_.load(std::memory_order_relaxed); }
  virtual std::size_t padded_dimension() const = 0;

 protected:
  virtual double do_measure(NodeId node) const = 0;

 private:
  std::atomic<std::size_t> queries_{0};
};

/// Every node sum of the sensing tree, built bottom-up by pairwise addition.
/// Leaves return the coefficients bit-exactly.
class CoefficientTree {
 public:
  explicit CoefficientTree(std::span<const double> coeffs);

  double sum(NodeId node) const;
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t padded_dimension() const noexcept { return levels_.front().size(); }
  int height() const noexcept { return static_cast<int>(levels_.size()) - 1; }

 private:
  std::size_t dimension_;
  std::vector<std::vector<double>> levels_;
};

/// Fast path: answers a node with the sum of the coefficients it covers.
class RangeSumOracle final : public MeasurementOracle {
 public:
  explicit RangeSumOracle(std::span<const double> coeffs);
  explicit RangeSumOracle(std::shared_ptr<const CoefficientTree> tree);

  std::size_t padded_dimension() const override { return tree_->padded_dimension(); }

 private:
  double do_measure(NodeId node) const override;

  std::shared_ptr<const CoefficientTree> tree_;
};

/// Reference path: materializes the node's sensing vector through the
/// transform and returns its inner product with the signal. Holds a
/// reference to `transform`, which must outlive the oracle.
class InnerProductOracle final : public MeasurementOracle {
 public:
  InnerProductOracle(std::span<const double> signal, const Transform& transform);

  std::size_t padded_dimension() const override { return padded_; }
  /// Sum of the analysis functionals covered by `node`; padded functionals are zero.
  std::vector<double> sensing_vector(NodeId node) const;

 private:
  double do_measure(NodeId node) const override;

  std::vector<double> signal_;
  const Transform* transform_;
  std::size_t padded_;
};

struct Measurement {
  NodeId node;
  double value = 0.0;
};

enum class TieBreak { lower_index_first, higher_index_first };

/// The k measurements of largest magnitude, ordered by rank. Equal
/// magnitudes go to the lexicographically smaller node unless `tie` says
/// otherwise.
std::vector<NodeId> select_top_k(std::span<const Measurement> measurements, std::size_t k,
                                 TieBreak tie = TieBreak::lower_index_first);

struct SparseEstimate {
  struct Entry {
    std::size_t index = 0;
    double value = 0.0;
  };

  std::size_t dimension = 0;
  std::vector<Entry> entries;  // ascending index

  bool contains(std::size_t index) const;
  /// Dense coefficient vector of length `dimension`.
  std::vector<double> dense() const;
};

struct LevelLog {
  int level = 0;
  std::vector<Measurement> measurements;  // in measurement order
  std::vector<NodeId> winners;            // empty at level 0
};

struct RunLog {
  std::vector<LevelLog> levels;  // initial level first, level 0 last

  std::size_t total_measurements() const;
};

/// CSV with header `level,node_index,value,winner`.
void write_run_log_csv(const RunLog& log, std::ostream& out);

struct SenseOptions {
  TieBreak tie_break = TieBreak::lower_index_first;
};

struct SenseResult {
  SparseEstimate estimate;
  RunLog log;
};

SenseResult k_ahs_sense(MeasurementOracle& oracle, const SensingConfig& config,
                        const SenseOptions& options = {});

/// Replays the selection rule over a log; returns a description of the
/// first violation of the descent structure or the count law, if any.
std::optional<std::string> audit_run_log(const RunLog& log, const SensingConfig& config);

/// Embeds the estimate and synthesizes. For a PermutedTransform the leaf
/// permutation is undone by the transform itself.
std::vector<double> reconstruct(const SparseEstimate& estimate, const Transform& transform);

}  // namespace kahs
