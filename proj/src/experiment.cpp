#include "infact/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "infact/io.hpp"

namespace infact {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kRunCheckpointMagic = 0x31504b4346ULL;  // "FCKP1"

std::string fmt(double x) { return std::isfinite(x) ? io::format_double(x) : std::string(); }
std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::ostream& schema_line(std::ostream& os, const char* tag) { return os << "# schema: " << tag << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::FormatError("cannot write " + path.string());
  out << text;
}

void write_omega(const fs::path& path, const Matrix& omega) {
  std::ostringstream os;
  schema_line(os, kSchemaOmega);
  for (Index r = 0; r < omega.rows(); ++r) {
    for (Index c = 0; c < omega.cols(); ++c) os << (c ? "," : "") << io::format_double(omega(r, c));
    os << '\n';
  }
  write_text(path, os.str());
}

std::string compiler_string() {
#if defined(__clang__)
  return std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  return std::string("gcc ") + __VERSION__;
#else
  return "unknown";
#endif
}

void write_manifest(const RunConfig& config, const fs::path& dir, const std::string& status,
                    double wall_seconds, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json doc;
  doc["schema"] = "infact.manifest/1";
  doc["tool"] = "infact";
  doc["version"] = kVersion;
  doc["mode"] = to_string(config.mode);
  doc["seed"] = config.seed;
  doc["status"] = status;
  doc["wall_seconds"] = wall_seconds;
  doc["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
  doc["compiler"] = compiler_string();
  doc["outputs"] = outputs;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& [k, v] : config_entries(config)) entries.push_back({k, v});
  doc["config"] = entries;
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

std::ostream& log_of(const RunOptions& o) { return o.log ? *o.log : std::clog; }

// ---------------------------------------------------------------- fit mode

struct ChainOutcome {
  std::vector<Index> kept;
  Matrix omega_sum;
  long omega_n = 0;
  double a1_sum = 0.0;
  double a2_sum = 0.0;
  bool failed = false;
  bool interrupted = false;
  std::string diagnostic;
};

void save_run_checkpoint(const fs::path& path, const Chain& chain, const ChainOutcome& acc,
                         std::uint64_t trace_offset, const std::string& fingerprint) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io::FormatError("cannot write " + tmp.string());
    io::BinaryWriter w(out);
    w.u64(kRunCheckpointMagic);
    w.str(fingerprint);
    chain.save(out);
    w.u64(acc.kept.size());
    for (Index k : acc.kept) w.i64(k);
    w.matrix(acc.omega_sum);
    w.i64(acc.omega_n);
    w.f64(acc.a1_sum);
    w.f64(acc.a2_sum);
    w.u64(trace_offset);
    out.flush();
    if (!out) throw io::FormatError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

Chain load_run_checkpoint(const fs::path& path, const Dataset& data, const PriorConfig& prior,
                          const std::string& fingerprint, ChainOutcome& acc,
                          std::uint64_t& trace_offset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::FormatError("cannot open checkpoint " + path.string());
  io::BinaryReader r(in);
  if (r.u64() != kRunCheckpointMagic) throw io::FormatError(path.string() + " is not a run checkpoint");
  if (r.str() != fingerprint)
    throw io::FormatError(path.string() + " was written under a different configuration");
  Chain chain = Chain::load(in, data, prior);
  const std::uint64_t n = r.u64();
  if (n > static_cast<std::uint64_t>(chain.iteration())) throw io::FormatError("corrupt checkpoint");
  acc.kept.resize(n);
  for (auto& k : acc.kept) k = static_cast<Index>(r.i64());
  acc.omega_sum = r.matrix();
  acc.omega_n = static_cast<long>(r.i64());
  acc.a1_sum = r.f64();
  acc.a2_sum = r.f64();
  trace_offset = r.u64();
  return chain;
}

ChainOutcome run_fit_chain(const RunConfig& config, const Dataset& data, const PriorConfig& prior,
                           int c, const fs::path& dir, const RunOptions& options,
                           const std::string& fingerprint) {
  ChainOutcome acc;
  acc.omega_sum = Matrix::Zero(data.p(), data.p());
  const fs::path ckpt = dir / "checkpoints" / ("chain" + std::to_string(c) + ".ckpt");
  const fs::path trace_path = dir / ("trace_chain" + std::to_string(c) + ".csv");
  try {
    std::uint64_t trace_offset = 0;
    std::optional<Chain> chain;
    if (options.resume && fs::exists(ckpt)) {
      chain.emplace(load_run_checkpoint(ckpt, data, prior, fingerprint, acc, trace_offset));
    } else {
      chain.emplace(data, prior, RngStream(config.seed).substream(static_cast<std::uint64_t>(c)));
    }
    std::ofstream trace;
    if (config.trace) {
      if (chain->iteration() == 0) {
        trace.open(trace_path, std::ios::binary | std::ios::trunc);
        schema_line(trace, kSchemaTrace) << trace_header(config.prior) << '\n';
      } else {
        if (!fs::exists(trace_path) || fs::file_size(trace_path) < trace_offset)
          throw io::FormatError("trace file is shorter than its checkpoint offset");
        fs::resize_file(trace_path, trace_offset);
        trace.open(trace_path, std::ios::binary | std::ios::app);
      }
      if (!trace) throw io::FormatError("cannot write " + trace_path.string());
    }
    auto offset = [&]() -> std::uint64_t {
      if (!config.trace) return 0;
      trace.flush();
      return static_cast<std::uint64_t>(fs::file_size(trace_path));
    };
    const long stop = options.stop_after ? std::min(*options.stop_after, config.iterations)
                                         : config.iterations;
    while (chain->iteration() < stop) {
      const long g = chain->iteration();
      const IterationRecord rec = chain->step();
      if (config.trace) trace << format_trace_row(config.prior, rec) << '\n';
      if (g >= config.burn_in) {
        acc.kept.push_back(rec.active);
        acc.omega_sum.noalias() += chain->core().loadings * chain->core().loadings.transpose();
        acc.omega_sum.diagonal() += chain->core().idio_variances;
        ++acc.omega_n;
        if (config.prior == PriorKind::mgp) {
          acc.a1_sum += rec.a1;
          acc.a2_sum += rec.a2;
        }
      }
      if ((g + 1) % config.checkpoint_every == 0 || g + 1 == config.iterations)
        save_run_checkpoint(ckpt, *chain, acc, offset(), fingerprint);
    }
    if (chain->iteration() < config.iterations) acc.interrupted = true;
  } catch (const std::exception& e) {
    acc.failed = true;
    acc.diagnostic = e.what();
  }
  return acc;
}

int run_fit(const RunConfig& config, const RunOptions& options, const fs::path& dir,
            std::vector<std::string>& outputs, std::string& status) {
  const Dataset raw = io::read_dataset(config.data);
  const DataTransform tr = fit_transform(raw, config.scaling);
  const Dataset data = apply_transform(raw, tr);
  const PriorConfig prior = prior_config_for(config, data.p(), data.T());
  fs::create_directories(dir / "checkpoints");
  // Everything except the output location must match for a resume.
  RunConfig fp = config;
  fp.out.clear();
  const std::string fingerprint = format_config(fp);

  std::vector<ChainOutcome> chains(static_cast<std::size_t>(config.chains));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int c = next++; c < config.chains; c = next++)
      chains[static_cast<std::size_t>(c)] = run_fit_chain(config, data, prior, c, dir, options, fingerprint);
  };
  const int n_threads = std::max(1, std::min(options.workers, config.chains));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  bool failed = false;
  bool interrupted = false;
  for (int c = 0; c < config.chains; ++c) {
    const auto& ch = chains[static_cast<std::size_t>(c)];
    if (ch.failed) {
      failed = true;
      log_of(options) << "chain " << c << " failed: " << ch.diagnostic << '\n';
    }
    interrupted = interrupted || ch.interrupted;
    if (config.trace) outputs.push_back("trace_chain" + std::to_string(c) + ".csv");
  }
  if (interrupted && !failed) {
    status = "interrupted";
    log_of(options) << "stopped early; rerun with --resume " << dir.string() << " to continue\n";
    return kExitInterrupted;
  }

  std::ostringstream summary;
  schema_line(summary, kSchemaFitSummary);
  summary << "chain,status,kept,mode,iqr,mean_active,a1_mean,a2_mean\n";
  std::vector<Index> pooled;
  Matrix omega_sum = Matrix::Zero(data.p(), data.p());
  long omega_n = 0;
  double a1 = 0.0;
  double a2 = 0.0;
  for (int c = 0; c < config.chains; ++c) {
    const auto& ch = chains[static_cast<std::size_t>(c)];
    if (ch.failed || ch.kept.empty()) {
      summary << c << ",failed,0,,,,,\n";
      continue;
    }
    const ModeIqr s = summarize(ch.kept);
    double mean_active = 0.0;
    for (Index k : ch.kept) mean_active += static_cast<double>(k);
    const auto n = static_cast<double>(ch.kept.size());
    mean_active /= n;
    const bool mgp = config.prior == PriorKind::mgp;
    summary << c << ",ok," << ch.kept.size() << ',' << fmt(s.mode) << ',' << fmt(s.iqr) << ','
            << fmt(mean_active) << ',' << (mgp ? fmt(ch.a1_sum / n) : "") << ','
            << (mgp ? fmt(ch.a2_sum / n) : "") << '\n';
    pooled.insert(pooled.end(), ch.kept.begin(), ch.kept.end());
    omega_sum += ch.omega_sum;
    omega_n += ch.omega_n;
    a1 += ch.a1_sum;
    a2 += ch.a2_sum;
  }
  if (!pooled.empty()) {
    const ModeIqr s = summarize(pooled);
    double mean_active = 0.0;
    for (Index k : pooled) mean_active += static_cast<double>(k);
    const auto n = static_cast<double>(pooled.size());
    const bool mgp = config.prior == PriorKind::mgp;
    summary << "all,ok," << pooled.size() << ',' << fmt(s.mode) << ',' << fmt(s.iqr) << ','
            << fmt(mean_active / n) << ',' << (mgp ? fmt(a1 / n) : "") << ','
            << (mgp ? fmt(a2 / n) : "") << '\n';

    std::map<Index, long> hist;
    for (Index k : pooled) ++hist[k];
    std::ostringstream dist;
    schema_line(dist, kSchemaDistribution);
    dist << "active,count,frequency\n";
    for (const auto& [k, cnt] : hist)
      dist << k << ',' << cnt << ',' << fmt(static_cast<double>(cnt) / n) << '\n';
    write_text(dir / "active_distribution.csv", dist.str());
    outputs.push_back("active_distribution.csv");

    const Matrix omega = unscale_covariance(omega_sum / static_cast<double>(omega_n), tr);
    write_omega(dir / "omega.csv", omega);
    outputs.push_back("omega.csv");
  }
  write_text(dir / "summary.csv", summary.str());
  outputs.push_back("summary.csv");
  status = failed ? "failed" : "ok";
  return failed ? kExitFailures : kExitOk;
}

// -------------------------------------------------------------- bench mode

int run_bench(const RunConfig& config, const RunOptions& options, const fs::path& dir,
              std::vector<std::string>& outputs, std::string& status) {
  std::ostringstream reps_csv;
  std::ostringstream summary;
  std::ostringstream timing;
  schema_line(reps_csv, kSchemaReplicates);
  reps_csv << "design,p,K,prior,replicate,seed,stream,status,mode,iqr,a1_mean,a2_mean,"
              "omega_rel_error,diagnostic\n";
  schema_line(summary, kSchemaBenchSummary);
  summary << "p,K,mode,iqr,a1,a2,design,prior,replicates,failed,pooled_iqr,cond_rate,"
             "cond_order,omega_rel_error,mode_equals_K,mode_exceeds_K\n";
  schema_line(timing, kSchemaTiming);
  timing << "design,replicate,wall_seconds\n";

  RunSettings run{config.iterations, config.burn_in, config.scaling, {}};
  if (config.trace) {
    fs::create_directories(dir / "traces");
    run.trace_dir = (dir / "traces").string();
  }
  const RngStream master(config.seed);
  int total_failed = 0;
  std::vector<std::string> failures;
  for (const DesignCell& cell : config.designs) {
    const SimDesign design = design_for(config, cell);
    const PriorConfig prior = prior_config_for(config, design.p, design.T);
    const RngStream design_rng = master.substream(design_stream_id(cell.p, cell.K));
    log_of(options) << "design " << design.id() << ": " << design.replicates << " replicates of "
                    << to_string(config.prior) << '\n';
    const auto reps = run_replicates(design, prior, run, design_rng, options.workers);
    for (const auto& r : reps) {
      reps_csv << design.id() << ',' << design.p << ',' << design.K_true << ','
               << to_string(config.prior) << ',' << r.replicate << ',' << r.seed << ',' << r.stream
               << ',' << (r.failed ? "failed" : "ok") << ',';
      if (r.failed) {
        reps_csv << ",,,,," << csv_escape(r.diagnostic) << '\n';
        failures.push_back(design.id() + " replicate " + std::to_string(r.replicate) + ": " + r.diagnostic);
      } else {
        reps_csv << fmt(r.mode) << ',' << fmt(r.iqr) << ',' << fmt(r.a1_mean) << ','
                 << fmt(r.a2_mean) << ',' << fmt(r.omega_rel_error) << ",\n";
      }
      timing << design.id() << ',' << r.replicate << ',' << std::fixed << std::setprecision(3)
             << r.wall_seconds << std::defaultfloat << '\n';
    }
    const DesignAggregate a = aggregate(design, reps);
    total_failed += a.failed;
    std::string rate;
    std::string order;
    if (a.a1_mean && a.a2_mean) {
      const ShrinkageConditions sc = check_increasing_shrinkage(*a.a1_mean, *a.a2_mean, config.mgp.b2);
      rate = sc.rate ? "true" : "false";
      order = sc.order ? "true" : "false";
    }
    summary << design.p << ',' << design.K_true << ',' << fmt(a.mean_mode) << ',' << fmt(a.mean_iqr)
            << ',' << fmt(a.a1_mean) << ',' << fmt(a.a2_mean) << ',' << design.id() << ','
            << to_string(config.prior) << ',' << a.replicates << ',' << a.failed << ','
            << fmt(a.pooled_iqr) << ',' << rate << ',' << order << ',' << fmt(a.mean_omega_error)
            << ',' << a.mode_equals_truth << ',' << a.mode_exceeds_truth << '\n';
  }
  write_text(dir / "replicates.csv", reps_csv.str());
  write_text(dir / "summary.csv", summary.str());
  write_text(dir / "timing.csv", timing.str());
  outputs.insert(outputs.end(), {"replicates.csv", "summary.csv", "timing.csv"});
  if (total_failed > 0) {
    auto& log = log_of(options);
    log << total_failed << " replicate(s) failed:\n";
    for (const auto& f : failures) log << "  " << f << '\n';
    status = "partial-failure";
    return kExitFailures;
  }
  status = "ok";
  return kExitOk;
}

}  // namespace

std::uint64_t design_stream_id(Index p, Index K) {
  return (static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint64_t>(K);
}

int workers_from_env() {
  const char* env = std::getenv("INFACT_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ParameterError("INFACT_WORKERS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 1024));
}

int run_experiment(const RunConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(config.out);
  fs::create_directories(dir);
  write_text(dir / "config.txt", format_config(config));
  std::vector<std::string> outputs = {"config.txt", "manifest.json"};
  std::string status = "running";
  int code = kExitOk;
  try {
    code = config.mode == RunMode::fit ? run_fit(config, options, dir, outputs, status)
                                       : run_bench(config, options, dir, outputs, status);
  } catch (const std::exception& e) {
    status = "error";
    log_of(options) << "error: " << e.what() << '\n';
    code = kExitFailures;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(config, dir, status, wall, outputs);
  return code;
}

}  // namespace infact
