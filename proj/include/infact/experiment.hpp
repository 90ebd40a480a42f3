#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "infact/config.hpp"

namespace infact {

/// Process exit codes of run_experiment.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitFailures = 2,     // some chains or replicates failed
  kExitInterrupted = 3,  // stopped early on request; resumable
};

struct RunOptions {
  int workers = 1;
  /// Stop every chain after this many completed iterations (fit mode), as if
  /// interrupted.  Used to exercise checkpoint/resume.
  std::optional<long> stop_after;
  /// Continue from the checkpoints already present in config.out.
  bool resume = false;
  std::ostream* log = nullptr;
};

/// Schema tags written as the first line of every CSV output.
inline constexpr const char* kSchemaReplicates = "infact.replicates/1";
inline constexpr const char* kSchemaBenchSummary = "infact.bench-summary/1";
inline constexpr const char* kSchemaTiming = "infact.timing/1";
inline constexpr const char* kSchemaFitSummary = "infact.fit-summary/1";
inline constexpr const char* kSchemaDistribution = "infact.active-distribution/1";
inline constexpr const char* kSchemaTrace = "infact.trace/1";
inline constexpr const char* kSchemaOmega = "infact.omega/1";

/// Runs fit or bench mode and writes every artifact into config.out.
int run_experiment(const RunConfig& config, const RunOptions& options = {});

/// Worker count from INFACT_WORKERS (default 1).
int workers_from_env();

/// Stream id of a bench design cell under the master seed.
std::uint64_t design_stream_id(Index p, Index K);

}  // namespace infact
