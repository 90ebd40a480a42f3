#include "infact/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace infact {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

}  // namespace

std::string SimDesign::id() const { return std::to_string(p) + "x" + std::to_string(K_true); }

void validate(const SimDesign& d) {
  require(d.p >= 2, "design p must be at least 2");
  require(d.K_true >= 1 && d.K_true <= d.p, "design K_true must lie in [1, p]");
  require(d.T >= 2, "design T must be at least 2");
  require(d.loading_scale > 0, "design loading_scale must be positive");
  require(d.idio_shape > 0 && d.idio_scale > 0, "design idiosyncratic parameters must be positive");
  require(d.replicates >= 1, "design replicates must be at least 1");
}

TrueModel generate_true_model(const SimDesign& d, RngStream& rng) {
  validate(d);
  TrueModel truth;
  truth.loadings = Matrix::Zero(d.p, d.K_true);
  std::vector<Index> positions(static_cast<std::size_t>(d.p));
  for (Index h = 0; h < d.K_true; ++h) {
    const Index lo = d.K_true + 1;
    const auto offset = static_cast<Index>(rng.uniform() * static_cast<double>(d.K_true));
    const Index count = std::min(d.p, lo + std::min(offset, d.K_true - 1));
    std::iota(positions.begin(), positions.end(), Index{0});
    // partial Fisher-Yates
    for (Index j = 0; j < count; ++j) {
      const auto span = static_cast<double>(d.p - j);
      const Index pick = j + std::min(static_cast<Index>(rng.uniform() * span), d.p - j - 1);
      std::swap(positions[static_cast<std::size_t>(j)], positions[static_cast<std::size_t>(pick)]);
      truth.loadings(positions[static_cast<std::size_t>(j)], h) = draw_normal(rng, 0.0, d.loading_scale);
    }
  }
  truth.idio_variances.resize(d.p);
  for (Index i = 0; i < d.p; ++i)
    truth.idio_variances(i) = draw_inverse_gamma(rng, d.idio_shape, d.idio_scale);
  return truth;
}

Dataset generate_dataset(const TrueModel& truth, Index T, RngStream& rng) {
  const Index p = truth.loadings.rows();
  const Index K = truth.loadings.cols();
  require(T >= 2, "need T >= 2");
  Matrix y(T, p);
  const Vector sd = truth.idio_variances.cwiseSqrt();
  for (Index t = 0; t < T; ++t) {
    const Vector f = draw_standard_normal(rng, K);
    const Vector e = draw_standard_normal(rng, p);
    y.row(t) = (truth.loadings * f + sd.cwiseProduct(e)).transpose();
  }
  return Dataset(std::move(y));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ModeIqr summarize(const std::vector<Index>& counts) {
  require(!counts.empty(), "cannot summarize an empty trace");
  std::map<Index, long> freq;
  for (Index c : counts) ++freq[c];
  Index best = freq.begin()->first;
  long best_n = 0;
  for (const auto& [value, n] : freq) {
    if (n > best_n) {
      best = value;
      best_n = n;
    }
  }
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  return {static_cast<double>(best), quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)};
}

std::string to_string(Scaling s) {
  switch (s) {
    case Scaling::none: return "none";
    case Scaling::center: return "center";
    case Scaling::standardize: return "standardize";
  }
  return "?";
}

Scaling parse_scaling(const std::string& name) {
  if (name == "none") return Scaling::none;
  if (name == "center") return Scaling::center;
  if (name == "standardize") return Scaling::standardize;
  throw ParameterError("unknown scaling '" + name + "' (expected none, center or standardize)");
}

DataTransform fit_transform(const Dataset& data, Scaling scaling) {
  const Index p = data.p();
  DataTransform tr{Vector::Zero(p), Vector::Ones(p)};
  if (scaling == Scaling::none) return tr;
  tr.mean = data.y().colwise().mean().transpose();
  if (scaling == Scaling::standardize) {
    const Matrix centered = data.y().rowwise() - tr.mean.transpose();
    const double denom = static_cast<double>(data.T() - 1);
    tr.scale = (centered.colwise().squaredNorm().transpose() / denom).cwiseSqrt();
    for (Index i = 0; i < p; ++i)
      if (!(tr.scale(i) > 0.0)) throw ParameterError("variable " + std::to_string(i) + " is constant");
  }
  return tr;
}

Dataset apply_transform(const Dataset& data, const DataTransform& tr) {
  Matrix y = (data.y().rowwise() - tr.mean.transpose()).array().rowwise() /
             tr.scale.transpose().array();
  return Dataset(std::move(y));
}

Matrix unscale_covariance(const Matrix& omega, const DataTransform& tr) {
  return tr.scale.asDiagonal() * omega * tr.scale.asDiagonal();
}

void OmegaAccumulator::add(const CoreState& core) {
  sum_.noalias() += core.loadings * core.loadings.transpose();
  sum_.diagonal() += core.idio_variances;
  ++n_;
}

Matrix OmegaAccumulator::mean() const {
  require(n_ > 0, "no draws accumulated");
  return sum_ / static_cast<double>(n_);
}

ReplicateSummary run_replicate(const SimDesign& design, const PriorConfig& prior,
                               const RunSettings& run, RngStream rng,
                               const std::string& trace_path) {
  require(run.burn_in >= 0 && run.burn_in < run.iterations, "burn_in must be below iterations");
  ReplicateSummary out;
  out.seed = rng.seed();
  out.stream = rng.stream();
  const auto start = std::chrono::steady_clock::now();
  try {
    RngStream truth_rng = rng.substream(0);
    RngStream data_rng = rng.substream(1);
    const TrueModel truth = generate_true_model(design, truth_rng);
    const Dataset raw = generate_dataset(truth, design.T, data_rng);
    const DataTransform tr = fit_transform(raw, run.scaling);
    const Dataset data = apply_transform(raw, tr);
    out.omega_true = truth.covariance();

    Chain chain(data, prior, rng.substream(2));
    std::ofstream trace;
    if (!trace_path.empty()) {
      trace.open(trace_path);
      if (!trace) throw std::runtime_error("cannot write " + trace_path);
      trace << "# schema: infact.trace/1\n" << trace_header(prior.kind) << '\n';
    }
    OmegaAccumulator omega(data.p());
    double a1_sum = 0.0;
    double a2_sum = 0.0;
    out.active_counts.reserve(static_cast<std::size_t>(run.iterations - run.burn_in));
    for (long g = 0; g < run.iterations; ++g) {
      const IterationRecord rec = chain.step();
      if (trace.is_open()) trace << format_trace_row(prior.kind, rec) << '\n';
      if (g < run.burn_in) continue;
      out.active_counts.push_back(rec.active);
      omega.add(chain.core());
      a1_sum += rec.a1;
      a2_sum += rec.a2;
    }
    const ModeIqr s = summarize(out.active_counts);
    out.mode = s.mode;
    out.iqr = s.iqr;
    if (prior.kind == PriorKind::mgp) {
      const auto kept = static_cast<double>(out.active_counts.size());
      out.a1_mean = a1_sum / kept;
      out.a2_mean = a2_sum / kept;
    }
    out.omega_mean = unscale_covariance(omega.mean(), tr);
    out.omega_rel_error = (out.omega_mean - out.omega_true).norm() / out.omega_true.norm();
  } catch (const std::exception& e) {
    out.failed = true;
    out.diagnostic = e.what();
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<ReplicateSummary> run_replicates(const SimDesign& design, const PriorConfig& prior,
                                             const RunSettings& run, const RngStream& rng,
                                             int workers) {
  validate(design);
  const auto n = static_cast<std::size_t>(design.replicates);
  std::vector<ReplicateSummary> out(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      const std::string path = run.trace_dir.empty()
                                   ? std::string()
                                   : run.trace_dir + "/trace_" + design.id() + "_r" +
                                         std::to_string(r) + ".csv";
      out[r] = run_replicate(design, prior, run, rng.substream(r), path);
      out[r].replicate = static_cast<int>(r);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || n == 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, n); ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return out;
}

DesignAggregate aggregate(const SimDesign& design, const std::vector<ReplicateSummary>& reps) {
  DesignAggregate a;
  a.replicates = static_cast<int>(reps.size());
  std::vector<double> pooled;
  double mode_sum = 0.0;
  double iqr_sum = 0.0;
  double err_sum = 0.0;
  double a1_sum = 0.0;
  double a2_sum = 0.0;
  int ok = 0;
  bool shapes = false;
  for (const auto& r : reps) {
    if (r.failed) {
      ++a.failed;
      continue;
    }
    ++ok;
    mode_sum += r.mode;
    iqr_sum += r.iqr;
    err_sum += r.omega_rel_error;
    if (r.mode == static_cast<double>(design.K_true)) ++a.mode_equals_truth;
    if (r.mode > static_cast<double>(design.K_true)) ++a.mode_exceeds_truth;
    if (r.a1_mean && r.a2_mean) {
      shapes = true;
      a1_sum += *r.a1_mean;
      a2_sum += *r.a2_mean;
    }
    pooled.insert(pooled.end(), r.active_counts.begin(), r.active_counts.end());
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double n = ok;
  a.mean_mode = ok ? mode_sum / n : nan;
  a.mean_iqr = ok ? iqr_sum / n : nan;
  a.mean_omega_error = ok ? err_sum / n : nan;
  if (shapes) {
    a.a1_mean = a1_sum / n;
    a.a2_mean = a2_sum / n;
  }
  if (pooled.empty()) {
    a.pooled_iqr = nan;
  } else {
    std::sort(pooled.begin(), pooled.end());
    a.pooled_iqr = quantile_sorted(pooled, 0.75) - quantile_sorted(pooled, 0.25);
  }
  return a;
}

}  // namespace infact
