#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infact/chain.hpp"

namespace infact {

/// One cell of the simulation grid.
struct SimDesign {
  Index p = 10;
  Index K_true = 3;
  Index T = 100;
  double loading_scale = 9.0;  // variance of the nonzero loadings
  double idio_shape = 1.0;
  double idio_scale = 0.25;
  int replicates = 10;

  /// "pxK", e.g. "10x3".
  std::string id() const;
};

void validate(const SimDesign& design);

struct TrueModel {
  Matrix loadings;  // p x K_true, exact zeros off the support
  Vector idio_variances;

  Matrix covariance() const { return implied_covariance(loadings, idio_variances); }
};

/// Column h gets a nonzero count uniform on {K+1, ..., 2K} (capped at p) at
/// positions drawn without replacement; values N(0, loading_scale); the
/// variances are IG(idio_shape, idio_scale).
TrueModel generate_true_model(const SimDesign& design, RngStream& rng);

/// T iid draws from N_p(0, Omega).
Dataset generate_dataset(const TrueModel& truth, Index T, RngStream& rng);

/// Linear-interpolation quantile of sorted data (the inclusive rule:
/// position q * (n - 1)).
double quantile_sorted(const std::vector<double>& sorted, double q);

struct ModeIqr {
  double mode = 0.0;
  double iqr = 0.0;
};

/// Most frequent value (ties go to the smallest) and q75 - q25.  Throws
/// ParameterError on an empty trace.
ModeIqr summarize(const std::vector<Index>& counts);

/// How the data are transformed before fitting.  Covariance estimates are
/// always reported on the original scale.
enum class Scaling { none, center, standardize };

std::string to_string(Scaling s);
Scaling parse_scaling(const std::string& name);

/// Column means and scales used by a transformation, so estimates can be
/// mapped back.
struct DataTransform {
  Vector mean;
  Vector scale;
};

DataTransform fit_transform(const Dataset& data, Scaling scaling);
Dataset apply_transform(const Dataset& data, const DataTransform& tr);
/// Omega on the original scale: D Omega D with D = diag(scale).
Matrix unscale_covariance(const Matrix& omega, const DataTransform& tr);

/// Running mean of Lambda Lambda' + Sigma over kept iterations.
class OmegaAccumulator {
 public:
  explicit OmegaAccumulator(Index p = 0) : sum_(Matrix::Zero(p, p)) {}
  void add(const CoreState& core);
  long count() const { return n_; }
  Matrix mean() const;
  const Matrix& sum() const { return sum_; }
  void restore(Matrix sum, long n) {
    sum_ = std::move(sum);
    n_ = n;
  }

 private:
  Matrix sum_;
  long n_ = 0;
};

struct RunSettings {
  long iterations = 15000;
  long burn_in = 5000;
  Scaling scaling = Scaling::none;
  /// When set, replicate r writes its trace to trace_dir/trace_<design>_r<r>.csv.
  std::string trace_dir;
};

struct ReplicateSummary {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<Index> active_counts;
  double mode = 0.0;
  double iqr = 0.0;
  std::optional<double> a1_mean;
  std::optional<double> a2_mean;
  Matrix omega_mean;
  Matrix omega_true;
  double omega_rel_error = 0.0;  // Frobenius, relative to the truth
  bool failed = false;
  std::string diagnostic;
  double wall_seconds = 0.0;
};

/// Generates a truth and a dataset, runs the configured sampler and records
/// the active count at every post-burn-in iteration.  Numeric failures mark
/// the replicate as failed instead of propagating.
ReplicateSummary run_replicate(const SimDesign& design, const PriorConfig& prior,
                               const RunSettings& run, RngStream rng,
                               const std::string& trace_path = {});

/// Runs design.replicates replicates, replicate r on rng.substream(r), over
/// `workers` threads.  The result does not depend on the worker count.
std::vector<ReplicateSummary> run_replicates(const SimDesign& design, const PriorConfig& prior,
                                             const RunSettings& run, const RngStream& rng,
                                             int workers);

/// Cross-replicate table row.
struct DesignAggregate {
  int replicates = 0;
  int failed = 0;
  double mean_mode = 0.0;
  double mean_iqr = 0.0;
  double pooled_iqr = 0.0;  // IQR of all kept counts pooled across replicates
  std::optional<double> a1_mean;
  std::optional<double> a2_mean;
  double mean_omega_error = 0.0;
  int mode_equals_truth = 0;
  int mode_exceeds_truth = 0;
};

/// Aggregates the successful replicates; all-failed input gives NaN means.
DesignAggregate aggregate(const SimDesign& design, const std::vector<ReplicateSummary>& reps);

}  // namespace infact
