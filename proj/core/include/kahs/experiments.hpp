#pragma once

// Monte-Carlo and image harnesses.
//
// Every harness is a pure function of its arguments. Trial i draws its
// randomness from derive_seed(master_seed, i); results are folded in trial
// order, so the thread count never changes the output.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kahs/models.hpp"
#include "kahs/pgm.hpp"
#include "kahs/sensing.hpp"
#include "kahs/transforms.hpp"

namespace kahs {

inline constexpr std::size_t kDetectionRanks = 16;

struct DetectionReport {
  ModelSpec spec;
  std::size_t sparsity = 0;  // K
  std::size_t trials = 0;
  std::vector<double> probability;  // probability[r] for rank r+1
};

/// Runs K-AHS on `trials` model signals (identity basis) and records how
/// often each of the 16 largest coefficients shows up among the nonzero
/// estimate entries.
DetectionReport detection_experiment(const ModelSpec& spec, std::size_t sparsity,
                                     std::size_t trials, std::uint64_t master_seed,
                                     std::size_t threads = 0);

struct EnergyRow {
  double alpha = 0.0;
  std::size_t sparsity = 0;
  double energy = 0.0;  // mean of |a_hat|^2 / |a|^2
};

/// Power-law signals of length `dimension`. For a given alpha every K sees
/// the same signals.
std::vector<EnergyRow> energy_experiment(std::span<const double> alphas,
                                         std::span<const std::size_t> sparsities,
                                         std::size_t dimension, std::size_t trials,
                                         std::uint64_t master_seed, std::size_t threads = 0);

struct SufficiencyInstance {
  ModelSpec spec;
  std::size_t sensing_sparsity = 0;  // K
  std::size_t significant = 0;       // k
  std::size_t partition = 0;         // Pi of the initial level
  double u = 0.0;
  double r = 0.0;
  bool collected = false;  // K-AHS found every significant coefficient
};

struct TailSweep {
  std::size_t held = 0;        // instances with u > r
  std::size_t violations = 0;  // u > r but a significant coefficient was missed
  std::optional<SufficiencyInstance> first_violation;
};

struct SufficiencyReport {
  std::size_t instances = 0;
  std::size_t collected = 0;
  TailSweep narrow;
  TailSweep extended;
};

/// Random small instances: N in [17, 64], K in [1, 4], k in [1, K], model
/// kind uniform, q in [1.05, 4), alpha in [1.05, 5), k-sparse support in
/// [1, 8]. Each instance is sensed once and checked against both tails.
SufficiencyReport sufficiency_sweep(std::size_t instances, std::uint64_t master_seed,
                                    std::size_t threads = 0);

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(255^2 / MSE) after clipping both inputs to [0, 255];
/// kPsnrInfinity when they agree exactly.
double psnr(std::span<const double> a, std::span<const double> b);
double psnr(const GrayImage& original, std::span<const double> reconstruction);

/// start, start+step, ..., up to stop (inclusive, with a 1e-9 guard).
std::vector<double> ratio_grid(double start, double step, double stop);
/// floor(ratio * n), tolerant to the rounding of decimal ratios.
std::size_t measurement_budget(double ratio, std::size_t n);

/// One K-AHS pass over an image through a freshly permuted basis.
struct ImageSensingRun {
  SensingConfig config;
  PermutedTransform transform;
  SenseResult result;
  std::size_t queries = 0;
};

/// `coeffs` must be base.analyze(image). Leaves are shuffled with
/// `permutation_seed`; sensing uses the range-sum oracle.
ImageSensingRun sense_image(const TransformPair& base, std::span<const double> coeffs,
                            std::size_t sparsity, std::uint64_t permutation_seed);

struct RateDistortionPoint {
  double ratio = 0.0;
  std::size_t sparsity = 0;
  std::size_t measurements = 0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;  // sample standard deviation, 0 for a single trial
  std::size_t trials = 0;
};

/// levels < 0 selects the full wavelet depth.
std::vector<RateDistortionPoint> image_experiment(const GrayImage& image, TransformKind basis,
                                                  std::span<const double> ratios,
                                                  std::size_t trials, std::uint64_t master_seed,
                                                  std::size_t threads = 0, int levels = -1);

struct CapturedReport {
  std::size_t sparsity = 0;
  std::vector<std::size_t> overlaps;  // per run: |sensed top-K set ∩ optimal top-K set|
  double mean = 0.0;
  double std = 0.0;
  // per run: ranks r where the sensed rank-r coefficient is the optimal
  // rank-r coefficient, i.e. where the two sorted-magnitude curves agree
  std::vector<std::size_t> rank_matches;
  double rank_match_mean = 0.0;
  double rank_match_std = 0.0;
  std::vector<double> optimal_magnitudes;  // K largest |a|, descending
  std::vector<double> sensed_magnitudes;   // K largest |a_hat| of run 0, descending
  bool dominated = true;  // every run: sensed rank-r magnitude <= optimal rank-r magnitude
};

CapturedReport captured_coefficients(const GrayImage& image, TransformKind basis,
                                     std::size_t sparsity, std::size_t runs,
                                     std::uint64_t master_seed, std::size_t threads = 0,
                                     int levels = -1);

struct SensingMap {
  int level = 0;
  std::size_t side = 0;
  std::vector<double> values;  // row-major, max-normalized to 1 unless all zero
};

/// Per level, the normalized sum of the rectified sensing vectors of that
/// level's K winners (all 2K observed leaves at level 0), initial level first.
std::vector<SensingMap> sensing_maps(const GrayImage& image, TransformKind basis,
                                     std::size_t sparsity, std::uint64_t seed,
                                     std::size_t threads = 0, int levels = -1);

}  // namespace kahs
