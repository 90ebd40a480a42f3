#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "infact/cusp.hpp"
#include "infact/ibp.hpp"
#include "infact/mgp.hpp"

namespace infact {

enum class PriorKind { mgp, cusp, ibp };

std::string to_string(PriorKind kind);
/// Throws ParameterError for anything other than "mgp", "cusp" or "ibp".
PriorKind parse_prior_kind(const std::string& name);

/// Everything a chain needs to run, already resolved for one dataset.
struct PriorConfig {
  PriorKind kind = PriorKind::cusp;
  CorePriors core;
  MgpHyper mgp;
  CuspHyper cusp;
  IbpHyper ibp;
  AdaptationSchedule schedule;
  bool adapt = true;
  /// Starting number of columns; 0 picks the per-prior default.
  Index initial_truncation = 0;
};

/// Per-prior default starting truncation for a p-variable, T-observation
/// dataset: the MGP rule, p + 1 for CUSP, min(p, ceil(5 ln p)) for IBP.
Index default_initial_truncation(PriorKind kind, Index p, Index T);

/// One row of the trace.  Fields that do not apply to the prior are NaN.
struct IterationRecord {
  long g = 0;
  Index truncation = 0;  // k*, H or k
  Index active = 0;      // k*, H* or K+
  double a1 = std::numeric_limits<double>::quiet_NaN();
  double a2 = std::numeric_limits<double>::quiet_NaN();
  bool a1_accepted = false;
  bool a2_accepted = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  AdaptOutcome adapt;
  long births = 0;
};

/// CSV header of the trace for a prior; matches format_trace_row.
std::string trace_header(PriorKind kind);
std::string format_trace_row(PriorKind kind, const IterationRecord& rec);

using PriorState = std::variant<MgpState, CuspState, IbpState>;

/// A single Gibbs chain over one dataset.  The dataset must outlive it.
class Chain {
 public:
  Chain(const Dataset& data, PriorConfig config, RngStream rng);

  /// Runs iteration g = iteration() and advances the counter.
  IterationRecord step();

  long iteration() const { return g_; }
  const Dataset& data() const { return *data_; }
  const PriorConfig& config() const { return config_; }
  const CoreState& core() const { return core_; }
  const PriorState& prior_state() const { return prior_; }
  const RngStream& rng() const { return rng_; }
  Index truncation() const;
  Index active_count() const;

  /// Writes the full chain state (not the dataset or the config).
  void save(std::ostream& out) const;
  /// Restores a chain written by save against the same dataset and config.
  static Chain load(std::istream& in, const Dataset& data, PriorConfig config);

 private:
  Chain(const Dataset& data, PriorConfig config, RngStream rng, std::nullopt_t);

  const Dataset* data_;
  PriorConfig config_;
  RngStream rng_;
  CoreState core_;
  PriorState prior_;
  long g_ = 0;
};

/// Checks the structural invariants that must hold after every iteration
/// and returns a description of the first violation, if any.
std::optional<std::string> audit_chain(const Chain& chain);

}  // namespace infact
