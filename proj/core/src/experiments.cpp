#include "kahs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "kahs/errors.hpp"
#include "kahs/parallel.hpp"
#include "kahs/rng.hpp"

namespace kahs {
namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::size_t square_side(const GrayImage& image) {
  if (image.width != image.height) {
    throw DimensionError(fmt::format("image must be square, got {}x{}", image.width, image.height));
  }
  return image.width;
}

}  // namespace

DetectionReport detection_experiment(const ModelSpec& spec, std::size_t sparsity,
                                     std::size_t trials, std::uint64_t master_seed,
                                     std::size_t threads) {
  spec.validate();
  if (trials == 0) throw InvalidParameter("trials must be >= 1");
  const auto config = SensingConfig::make(spec.dimension, sparsity);
  const std::size_t ranks = std::min(kDetectionRanks, spec.dimension);

  std::vector<std::vector<std::uint8_t>> hits(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    ModelSpec trial_spec = spec;
    trial_spec.seed = derive_seed(master_seed, t);
    const auto signal = generate(trial_spec);
    RangeSumOracle oracle(signal.coefficients);
    const auto estimate = k_ahs_sense(oracle, config).estimate.dense();
    auto& row = hits[t];
    row.resize(ranks);
    for (std::size_t r = 0; r < ranks; ++r) {
      row[r] = estimate[signal.rank_order[r]] != 0.0 ? 1 : 0;
    }
  });

  DetectionReport report{spec, sparsity, trials, std::vector<double>(ranks, 0.0)};
  for (const auto& row : hits) {
    for (std::size_t r = 0; r < ranks; ++r) report.probability[r] += row[r];
  }
  for (auto& p : report.probability) p /= static_cast<double>(trials);
  return report;
}

std::vector<EnergyRow> energy_experiment(std::span<const double> alphas,
                                         std::span<const std::size_t> sparsities,
                                         std::size_t dimension, std::size_t trials,
                                         std::uint64_t master_seed, std::size_t threads) {
  if (trials == 0) throw InvalidParameter("trials must be >= 1");
  std::vector<SensingConfig> configs;
  for (auto k : sparsities) configs.push_back(SensingConfig::make(dimension, k));

  std::vector<EnergyRow> rows;
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    ModelSpec spec;
    spec.kind = ModelKind::powerlaw;
    spec.dimension = dimension;
    spec.exponent = alphas[ai];
    spec.validate();
    const std::uint64_t alpha_seed = derive_seed(master_seed, ai);

    // energy[t][ki]
    std::vector<std::vector<double>> energy(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      ModelSpec trial_spec = spec;
      trial_spec.seed = derive_seed(alpha_seed, t);
      const auto signal = generate(trial_spec);
      double total = 0.0;
      for (double v : signal.coefficients) total += v * v;
      auto tree = std::make_shared<const CoefficientTree>(signal.coefficients);
      for (const auto& cfg : configs) {
        RangeSumOracle oracle(tree);
        const auto est = k_ahs_sense(oracle, cfg).estimate;
        double captured = 0.0;
        for (const auto& e : est.entries) captured += e.value * e.value;
        energy[t].push_back(captured / total);
      }
    });

    for (std::size_t ki = 0; ki < configs.size(); ++ki) {
      double sum = 0.0;
      for (const auto& row : energy) sum += row[ki];
      rows.push_back({alphas[ai], sparsities[ki], sum / static_cast<double>(trials)});
    }
  }
  return rows;
}

SufficiencyReport sufficiency_sweep(std::size_t instances, std::uint64_t master_seed,
                                    std::size_t threads) {
  struct Outcome {
    SufficiencyInstance narrow;
    SufficiencyInstance extended;
  };
  std::vector<Outcome> outcomes(instances);
  parallel_for(instances, threads, [&](std::size_t t) {
    Rng rng(derive_seed(master_seed, t));
    ModelSpec spec;
    spec.dimension = 17 + rng.below(48);
    switch (rng.below(3)) {
      case 0:
        spec.kind = ModelKind::ksparse;
        spec.sparsity = 1 + rng.below(8);
        break;
      case 1:
        spec.kind = ModelKind::exponential;
        spec.base = 1.05 + 2.95 * rng.uniform();
        break;
      default:
        spec.kind = ModelKind::powerlaw;
        spec.exponent = 1.05 + 3.95 * rng.uniform();
        break;
    }
    spec.seed = rng.next();
    const std::size_t big_k = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(big_k);

    const auto signal = generate(spec);
    const auto config = SensingConfig::make(spec.dimension, big_k);
    RangeSumOracle oracle(signal.coefficients);
    const auto estimate = k_ahs_sense(oracle, config).estimate;
    const auto significant = significant_set(signal.coefficients, k);
    bool collected = true;
    for (auto index : significant.indices) collected = collected && estimate.contains(index);

    const auto mags = sorted_magnitudes(signal.coefficients);
    const std::size_t partition = std::size_t{1} << config.initial_level;
    const double u = u_min_subset(significant.values);
    SufficiencyInstance base{spec, big_k, k, partition, u, 0.0, collected};
    outcomes[t].narrow = base;
    outcomes[t].narrow.r = r_tail(mags, k, partition);
    outcomes[t].extended = base;
    outcomes[t].extended.r = r_tail_extended(mags, k, partition);
  });

  SufficiencyReport report;
  report.instances = instances;
  auto tally = [](TailSweep& sweep, const SufficiencyInstance& inst) {
    if (!(inst.u > inst.r)) return;
    ++sweep.held;
    if (inst.collected) return;
    ++sweep.violations;
    if (!sweep.first_violation) sweep.first_violation = inst;
  };
  for (const auto& o : outcomes) {
    report.collected += o.narrow.collected;
    tally(report.narrow, o.narrow);
    tally(report.extended, o.extended);
  }
  return report;
}

double psnr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError(fmt::format("PSNR needs equal non-empty sizes, got {} and {}", a.size(),
                                     b.size()));
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::clamp(a[i], 0.0, 255.0) - std::clamp(b[i], 0.0, 255.0);
    se += d * d;
  }
  if (se == 0.0) return kPsnrInfinity;
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const GrayImage& original, std::span<const double> reconstruction) {
  const auto signal = original.to_signal();
  return psnr(signal, reconstruction);
}

std::vector<double> ratio_grid(double start, double step, double stop) {
  if (!(step > 0.0) || !(start > 0.0) || stop < start) {
    throw InvalidParameter(fmt::format("bad ratio grid {}:{}:{}", start, step, stop));
  }
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double r = start + static_cast<double>(i) * step;
    if (r > stop + 1e-9) break;
    grid.push_back(r);
  }
  return grid;
}

std::size_t measurement_budget(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

ImageSensingRun sense_image(const TransformPair& base, std::span<const double> coeffs,
                            std::size_t sparsity, std::uint64_t permutation_seed) {
  auto transform = permuted(base, permutation_seed);
  const auto config = SensingConfig::make(base.dimension(), sparsity);
  RangeSumOracle oracle(transform.permute(coeffs));
  auto result = k_ahs_sense(oracle, config);
  const std::size_t queries = oracle.queries();
  return {config, std::move(transform), std::move(result), queries};
}

std::vector<RateDistortionPoint> image_experiment(const GrayImage& image, TransformKind basis,
                                                  std::span<const double> ratios,
                                                  std::size_t trials, std::uint64_t master_seed,
                                                  std::size_t threads, int levels) {
  if (trials == 0) throw InvalidParameter("trials must be >= 1");
  const auto base = make_transform(basis, square_side(image), levels);
  const auto signal = image.to_signal();
  const auto coeffs = base.analyze(signal);
  const std::size_t n = base.dimension();

  std::vector<RateDistortionPoint> points;
  for (double ratio : ratios) {
    RateDistortionPoint p;
    p.ratio = ratio;
    p.sparsity = k_for_budget(padded_dimension(n), measurement_budget(ratio, n));
    p.measurements = measurement_count(padded_dimension(n), p.sparsity);
    p.trials = trials;
    points.push_back(p);
  }

  // scores[t][i]; trial t uses the same leaf permutation at every ratio.
  std::vector<std::vector<double>> scores(trials, std::vector<double>(points.size()));
  parallel_for(trials, threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(master_seed, t);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto run = sense_image(base, coeffs, points[i].sparsity, seed);
      if (run.queries != points[i].measurements) {
        throw std::logic_error("oracle query count departs from the measurement count law");
      }
      const auto recon = run.transform.synthesize(run.result.estimate.dense());
      scores[t][i] = psnr(signal, recon);
    }
  });

  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> column(trials);
    for (std::size_t t = 0; t < trials; ++t) column[t] = scores[t][i];
    const auto stats = mean_std(column);
    points[i].psnr_mean = stats.mean;
    points[i].psnr_std = stats.std;
  }
  return points;
}

CapturedReport captured_coefficients(const GrayImage& image, TransformKind basis,
                                     std::size_t sparsity, std::size_t runs,
                                     std::uint64_t master_seed, std::size_t threads, int levels) {
  if (runs == 0) throw InvalidParameter("runs must be >= 1");
  const auto base = make_transform(basis, square_side(image), levels);
  const auto coeffs = base.analyze(image.to_signal());
  const auto optimal_set = significant_set(coeffs, sparsity);
  const std::vector<std::size_t>& optimal_ranked = optimal_set.indices;
  std::vector<std::size_t> optimal_indices = optimal_set.indices;
  std::sort(optimal_indices.begin(), optimal_indices.end());

  CapturedReport report;
  report.sparsity = sparsity;
  const auto all_mags = sorted_magnitudes(coeffs);
  report.optimal_magnitudes.assign(all_mags.begin(),
                                   all_mags.begin() + static_cast<std::ptrdiff_t>(sparsity));

  std::vector<std::vector<double>> sensed(runs);
  report.overlaps.assign(runs, 0);
  report.rank_matches.assign(runs, 0);
  parallel_for(runs, threads, [&](std::size_t r) {
    const auto run = sense_image(base, coeffs, sparsity, derive_seed(master_seed, r));
    const auto& perm = run.transform.perm();
    // Map leaves back to basis indices, then keep the K largest magnitudes.
    std::vector<double> values;
    std::vector<std::size_t> indices;
    for (const auto& e : run.result.estimate.entries) {
      indices.push_back(perm[e.index]);
      values.push_back(e.value);
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ma = std::abs(values[a]);
      const double mb = std::abs(values[b]);
      return ma != mb ? ma > mb : indices[a] < indices[b];
    });
    const std::size_t keep = std::min(sparsity, order.size());
    std::vector<std::size_t> top;
    auto& mags = sensed[r];
    for (std::size_t i = 0; i < keep; ++i) {
      top.push_back(indices[order[i]]);
      mags.push_back(std::abs(values[order[i]]));
      report.rank_matches[r] += top.back() == optimal_ranked[i];
    }
    mags.resize(sparsity, 0.0);
    std::sort(top.begin(), top.end());
    std::vector<std::size_t> common;
    std::set_intersection(top.begin(), top.end(), optimal_indices.begin(), optimal_indices.end(),
                          std::back_inserter(common));
    report.overlaps[r] = common.size();
  });

  for (const auto& mags : sensed) {
    for (std::size_t i = 0; i < sparsity; ++i) {
      if (mags[i] > report.optimal_magnitudes[i]) report.dominated = false;
    }
  }
  report.sensed_magnitudes = sensed.front();
  std::vector<double> overlaps(report.overlaps.begin(), report.overlaps.end());
  const auto stats = mean_std(overlaps);
  report.mean = stats.mean;
  report.std = stats.std;
  std::vector<double> matches(report.rank_matches.begin(), report.rank_matches.end());
  const auto match_stats = mean_std(matches);
  report.rank_match_mean = match_stats.mean;
  report.rank_match_std = match_stats.std;
  return report;
}

std::vector<SensingMap> sensing_maps(const GrayImage& image, TransformKind basis,
                                     std::size_t sparsity, std::uint64_t seed,
                                     std::size_t threads, int levels) {
  const std::size_t side = square_side(image);
  const auto base = make_transform(basis, side, levels);
  const auto signal = image.to_signal();
  const auto run = sense_image(base, base.analyze(signal), sparsity, seed);
  const InnerProductOracle reference(signal, run.transform);

  std::vector<SensingMap> maps;
  for (const auto& level : run.result.log.levels) {
    std::vector<NodeId> nodes = level.winners;
    if (level.level == 0) {
      for (const auto& m : level.measurements) nodes.push_back(m.node);
    }
    std::sort(nodes.begin(), nodes.end());

    // Fixed chunking keeps the floating-point summation order independent
    // of the thread count.
    const std::size_t chunks = std::min<std::size_t>(16, nodes.size());
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(base.dimension(), 0.0));
    parallel_for(chunks, threads, [&](std::size_t c) {
      const std::size_t begin = c * nodes.size() / chunks;
      const std::size_t end = (c + 1) * nodes.size() / chunks;
      auto& acc = partial[c];
      for (std::size_t i = begin; i < end; ++i) {
        const auto phi = reference.sensing_vector(nodes[i]);
        for (std::size_t p = 0; p < phi.size(); ++p) acc[p] += std::abs(phi[p]);
      }
    });

    SensingMap map{level.level, side, std::vector<double>(base.dimension(), 0.0)};
    for (const auto& acc : partial) {
      for (std::size_t p = 0; p < acc.size(); ++p) map.values[p] += acc[p];
    }
    const double peak = *std::max_element(map.values.begin(), map.values.end());
    if (peak > 0.0) {
      for (auto& v : map.values) v /= peak;
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

}  // namespace kahs
