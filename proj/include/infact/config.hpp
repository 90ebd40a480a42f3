#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "infact/bench.hpp"

namespace infact {

inline constexpr const char* kVersion = "1.0.0";

enum class RunMode { fit, bench };

std::string to_string(RunMode mode);

/// Invalid or unknown configuration entries.  `fields()` names every
/// offending key.
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& message, std::vector<std::string> fields)
      : ParameterError(message), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

struct DesignCell {
  Index p = 0;
  Index K = 0;
  friend bool operator==(const DesignCell&, const DesignCell&) = default;
};

/// "6x2,10x3" -> {(6,2), (10,3)}.
std::vector<DesignCell> parse_design_list(const std::string& text);
std::string format_design_list(const std::vector<DesignCell>& cells);

/// Fully resolved run configuration.  Every field has a concrete value after
/// resolve_config; nothing is left to be defaulted later.
struct RunConfig {
  RunMode mode = RunMode::bench;
  PriorKind prior = PriorKind::cusp;
  long iterations = 15000;
  long burn_in = 5000;
  std::uint64_t seed = 1;
  int chains = 1;

  // bench mode
  std::vector<DesignCell> designs;
  Index T = 100;
  int replicates = 10;
  double loading_scale = 9.0;
  double idio_shape = 1.0;
  double idio_scale = 0.25;

  // fit mode
  std::string data;

  std::string out = "infact-out";
  Scaling scaling = Scaling::none;
  CorePriors core;
  MgpHyper mgp;
  CuspHyper cusp;
  IbpHyper ibp;

  bool adapt = true;
  // (alpha0, alpha1) when p < T and when p >= T
  double alpha0 = -1.0;
  double alpha1 = -5e-4;
  double alpha0_wide = -1.0;
  double alpha1_wide = -5e-4;
  long adapt_gate = 5000;
  Index k0 = 0;  // 0: per-prior default

  bool trace = false;
  long checkpoint_every = 1000;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment.  A document starting
/// with '{' is read as a run manifest and its "config" object is used.
ConfigEntries parse_config_text(const std::string& text);
ConfigEntries read_config_file(const std::string& path);

/// Applies entries (later entries win) on top of the defaults of the chosen
/// prior, then materialises derived defaults and checks invariants.
RunConfig resolve_config(const ConfigEntries& entries);

/// parse_config(path or flags): file entries first, then flag overrides.
RunConfig parse_config(const std::string& path, const ConfigEntries& overrides = {});

/// Every field as key/value strings, in a fixed order.  resolve_config of
/// this list reproduces the same config.
ConfigEntries config_entries(const RunConfig& config);
std::string format_config(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

/// The chain settings for a dataset with p variables and T observations.
PriorConfig prior_config_for(const RunConfig& config, Index p, Index T);

/// Bench design for one grid cell.
SimDesign design_for(const RunConfig& config, const DesignCell& cell);

}  // namespace infact
