#include "kahs/sensing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "kahs/errors.hpp"

namespace kahs {

CoefficientRange coefficient_range(NodeId node) noexcept {
  return {node.index << node.level, (node.index + 1) << node.level};
}

std::size_t padded_dimension(std::size_t n) {
  if (n == 0) throw DimensionError("dimension must be >= 1");
  return std::bit_ceil(n);
}

std::vector<double> pad_coefficients(std::span<const double> coeffs, std::size_t padded) {
  if (padded < coeffs.size()) throw DimensionError("padded dimension smaller than input");
  std::vector<double> out(padded, 0.0);
  std::copy(coeffs.begin(), coeffs.end(), out.begin());
  return out;
}

int initial_level(std::size_t padded, std::size_t sparsity) {
  if (padded == 0 || !std::has_single_bit(padded)) {
    throw DimensionError(fmt::format("padded dimension {} is not a power of two", padded));
  }
  if (sparsity < 1 || sparsity >= padded / 4) {
    throw InvalidSparsity(
        fmt::format("K = {} outside [1, {}) for dimension {}", sparsity, padded / 4, padded));
  }
  const int log_n = std::countr_zero(padded);
  const int log_k = std::bit_width(sparsity) - 1;
  return log_n - log_k - 2;
}

std::size_t measurement_count(std::size_t padded, std::size_t sparsity) {
  const int level = initial_level(padded, sparsity);
  return (padded >> level) + 2 * sparsity * static_cast<std::size_t>(level);
}

double measurement_bound(std::size_t padded, std::size_t sparsity) {
  initial_level(padded, sparsity);
  const double k = static_cast<double>(sparsity);
  return 2.0 * k * std::log2(static_cast<double>(padded) / k);
}

std::size_t k_for_budget(std::size_t padded, std::size_t budget) {
  // measurement_count is strictly increasing in K, so the scan can stop at
  // the first overshoot.
  std::size_t best = 0;
  for (std::size_t k = 1; k < padded / 4; ++k) {
    if (measurement_count(padded, k) > budget) break;
    best = k;
  }
  if (best == 0) {
    throw InvalidParameter(
        fmt::format("no K in [1, {}) fits a budget of {} measurements", padded / 4, budget));
  }
  return best;
}

SensingConfig SensingConfig::make(std::size_t dimension, std::size_t sparsity) {
  SensingConfig cfg;
  cfg.dimension = dimension;
  cfg.padded_dimension = kahs::padded_dimension(dimension);
  cfg.sparsity = sparsity;
  cfg.initial_level = kahs::initial_level(cfg.padded_dimension, sparsity);
  return cfg;
}

CoefficientTree::CoefficientTree(std::span<const double> coeffs) : dimension_(coeffs.size()) {
  const std::size_t padded = kahs::padded_dimension(coeffs.size());
  levels_.push_back(pad_coefficients(coeffs, padded));
  while (levels_.back().size() > 1) {
    const auto& below = levels_.back();
    std::vector<double> above(below.size() / 2);
    for (std::size_t i = 0; i < above.size(); ++i) above[i] = below[2 * i] + below[2 * i + 1];
    levels_.push_back(std::move(above));
  }
}

double CoefficientTree::sum(NodeId node) const {
  if (node.level < 0 || node.level > height() ||
      node.index >= levels_[static_cast<std::size_t>(node.level)].size()) {
    throw DimensionError(fmt::format("node ({}, {}) outside the sensing tree of height {}",
                                     node.level, node.index, height()));
  }
  return levels_[static_cast<std::size_t>(node.level)][node.index];
}

RangeSumOracle::RangeSumOracle(std::span<const double> coeffs)
    : tree_(std::make_shared<const CoefficientTree>(coeffs)) {}

RangeSumOracle::RangeSumOracle(std::shared_ptr<const CoefficientTree> tree)
    : tree_(std::move(tree)) {}

double RangeSumOracle::do_measure(NodeId node) const { return tree_->sum(node); }

InnerProductOracle::InnerProductOracle(std::span<const double> signal, const Transform& transform)
    : signal_(signal.begin(), signal.end()),
      transform_(&transform),
      padded_(kahs::padded_dimension(transform.dimension())) {
  if (signal.size() != transform.dimension()) {
    throw DimensionError(fmt::format("signal length {} does not match transform dimension {}",
                                     signal.size(), transform.dimension()));
  }
}

std::vector<double> InnerProductOracle::sensing_vector(NodeId node) const {
  const auto range = coefficient_range(node);
  if (node.level < 0 || range.end > padded_) {
    throw DimensionError(fmt::format("node ({}, {}) outside the sensing tree", node.level,
                                     node.index));
  }
  const std::size_t n = transform_->dimension();
  if (range.begin >= n) return std::vector<double>(n, 0.0);
  std::vector<double> indicator(n, 0.0);
  std::fill(indicator.begin() + static_cast<std::ptrdiff_t>(range.begin),
            indicator.begin() + static_cast<std::ptrdiff_t>(std::min(range.end, n)), 1.0);
  return transform_->analyze_adjoint(indicator);
}

double InnerProductOracle::do_measure(NodeId node) const {
  if (coefficient_range(node).begin >= transform_->dimension()) {
    if (node.level < 0 || coefficient_range(node).end > padded_) {
      throw DimensionError("node outside the sensing tree");
    }
    return 0.0;
  }
  const auto phi = sensing_vector(node);
  double acc = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) acc += signal_[i] * phi[i];
  return acc;
}

std::vector<NodeId> select_top_k(std::span<const Measurement> measurements, std::size_t k,
                                 TieBreak tie) {
  if (k > measurements.size()) {
    throw InvalidParameter(
        fmt::format("cannot select {} winners from {} measurements", k, measurements.size()));
  }
  std::vector<Measurement> ranked(measurements.begin(), measurements.end());
  auto before = [tie](const Measurement& a, const Measurement& b) {
    const double ma = std::abs(a.value);
    const double mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    return tie == TieBreak::lower_index_first ? a.node < b.node : b.node < a.node;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    before);
  std::vector<NodeId> winners(k);
  for (std::size_t i = 0; i < k; ++i) winners[i] = ranked[i].node;
  return winners;
}

bool SparseEstimate::contains(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const Entry& e, std::size_t i) { return e.index < i; });
  return it != entries.end() && it->index == index;
}

std::vector<double> SparseEstimate::dense() const {
  std::vector<double> out(dimension, 0.0);
  for (const auto& e : entries) out.at(e.index) = e.value;
  return out;
}

std::size_t RunLog::total_measurements() const {
  std::size_t total = 0;
  for (const auto& level : levels) total += level.measurements.size();
  return total;
}

void write_run_log_csv(const RunLog& log, std::ostream& out) {
  out << "level,node_index,value,winner\n";
  for (const auto& level : log.levels) {
    std::vector<NodeId> winners = level.winners;
    std::sort(winners.begin(), winners.end());
    for (const auto& m : level.measurements) {
      const bool won = std::binary_search(winners.begin(), winners.end(), m.node);
      fmt::print(out, "{},{},{},{}\n", m.node.level, m.node.index, m.value, won ? 1 : 0);
    }
  }
}

SenseResult k_ahs_sense(MeasurementOracle& oracle, const SensingConfig& config,
                        const SenseOptions& options) {
  const SensingConfig checked = SensingConfig::make(config.dimension, config.sparsity);
  if (checked.initial_level != config.initial_level ||
      checked.padded_dimension != config.padded_dimension) {
    throw InvalidParameter("inconsistent sensing configuration");
  }
  if (oracle.padded_dimension() != config.padded_dimension) {
    throw DimensionError(fmt::format("oracle covers {} coefficients, configuration expects {}",
                                     oracle.padded_dimension(), config.padded_dimension));
  }

  SenseResult result;
  auto& levels = result.log.levels;
  const int top = config.initial_level;

  LevelLog current{top, {}, {}};
  const std::size_t width = config.padded_dimension >> top;
  current.measurements.reserve(width);
  for (std::size_t n = 0; n < width; ++n) {
    const NodeId node{top, n};
    current.measurements.push_back({node, oracle.measure(node)});
  }

  for (int level = top; level >= 1; --level) {
    current.winners = select_top_k(current.measurements, config.sparsity, options.tie_break);
    std::vector<NodeId> expand = current.winners;
    std::sort(expand.begin(), expand.end());

    LevelLog next{level - 1, {}, {}};
    next.measurements.reserve(2 * expand.size());
    for (const auto& winner : expand) {
      const auto [left, right] = winner.children();
      next.measurements.push_back({left, oracle.measure(left)});
      next.measurements.push_back({right, oracle.measure(right)});
    }
    levels.push_back(std::move(current));
    current = std::move(next);
  }

  auto& estimate = result.estimate;
  estimate.dimension = config.dimension;
  for (const auto& m : current.measurements) {
    if (m.node.index < config.dimension) estimate.entries.push_back({m.node.index, m.value});
  }
  std::sort(estimate.entries.begin(), estimate.entries.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  levels.push_back(std::move(current));
  return result;
}

std::optional<std::string> audit_run_log(const RunLog& log, const SensingConfig& config) {
  const int top = config.initial_level;
  if (log.levels.size() != static_cast<std::size_t>(top) + 1) {
    return fmt::format("expected {} levels, log has {}", top + 1, log.levels.size());
  }
  if (log.total_measurements() != config.measurements()) {
    return fmt::format("log holds {} measurements, count law gives {}", log.total_measurements(),
                       config.measurements());
  }
  for (std::size_t i = 0; i < log.levels.size(); ++i) {
    const auto& level = log.levels[i];
    const int expected_level = top - static_cast<int>(i);
    if (level.level != expected_level) {
      return fmt::format("level {} recorded where {} was expected", level.level, expected_level);
    }
    for (const auto& m : level.measurements) {
      if (m.node.level != expected_level) {
        return fmt::format("node at level {} filed under level {}", m.node.level, expected_level);
      }
    }
    if (expected_level == 0) {
      if (!level.winners.empty()) return std::string("level 0 must not select winners");
      break;
    }
    const auto expected = select_top_k(level.measurements, config.sparsity);
    if (level.winners != expected) {
      return fmt::format("winners at level {} do not follow the magnitude/tie-break rule",
                         expected_level);
    }
    std::vector<NodeId> children;
    for (const auto& w : expected) {
      const auto [left, right] = w.children();
      children.push_back(left);
      children.push_back(right);
    }
    std::sort(children.begin(), children.end());
    std::vector<NodeId> measured;
    for (const auto& m : log.levels[i + 1].measurements) measured.push_back(m.node);
    std::sort(measured.begin(), measured.end());
    if (measured != children) {
      return fmt::format("level {} measured nodes that are not children of level {} winners",
                         expected_level - 1, expected_level);
    }
  }
  return std::nullopt;
}

std::vector<double> reconstruct(const SparseEstimate& estimate, const Transform& transform) {
  const std::size_t n = transform.dimension();
  std::vector<double> coeffs(n, 0.0);
  for (const auto& e : estimate.entries) {
    if (e.index >= n) {
      throw DimensionError(fmt::format("estimate index {} outside dimension {}", e.index, n));
    }
    coeffs[e.index] = e.value;
  }
  return transform.synthesize(coeffs);
}

}  // namespace kahs
