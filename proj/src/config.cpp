#include "infact/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "infact/io.hpp"

namespace infact {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("invalid value '" + value + "' for field '" + key + "': " + why, {key});
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || v.empty()) bad_value(key, v, "expected a number");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "expected an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "expected true or false");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }
std::string from_double(double x) { return io::format_double(x); }

std::string slab_name(SlabDensity s) { return s == SlabDensity::joint ? "joint" : "product"; }

std::string odds_name(PriorOdds o) {
  switch (o) {
    case PriorOdds::variables: return "variables";
    case PriorOdds::observations: return "observations";
    case PriorOdds::finite: return "finite";
  }
  return "?";
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define INFACT_DOUBLE(name, member)                                              \
  Field {                                                                        \
    name, [](const RunConfig& c) { return from_double(c.member); },              \
        [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); } \
  }
#define INFACT_BOOL(name, member)                                              \
  Field {                                                                      \
    name, [](const RunConfig& c) { return from_bool(c.member); },              \
        [](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"mode", [](const RunConfig& c) { return to_string(c.mode); },
       [](RunConfig& c, const std::string& v) {
         if (v == "fit") c.mode = RunMode::fit;
         else if (v == "bench") c.mode = RunMode::bench;
         else bad_value("mode", v, "expected fit or bench");
       }},
      {"prior", [](const RunConfig& c) { return to_string(c.prior); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.prior = parse_prior_kind(v);
         } catch (const ParameterError& e) {
           bad_value("prior", v, "expected mgp, cusp or ibp");
         }
       }},
      {"iterations", [](const RunConfig& c) { return std::to_string(c.iterations); },
       [](RunConfig& c, const std::string& v) { c.iterations = to_int<long>("iterations", v); }},
      {"burn_in", [](const RunConfig& c) { return std::to_string(c.burn_in); },
       [](RunConfig& c, const std::string& v) { c.burn_in = to_int<long>("burn_in", v); }},
      {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>("seed", v); }},
      {"chains", [](const RunConfig& c) { return std::to_string(c.chains); },
       [](RunConfig& c, const std::string& v) { c.chains = to_int<int>("chains", v); }},
      {"designs", [](const RunConfig& c) { return format_design_list(c.designs); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.designs = parse_design_list(v);
         } catch (const ParameterError& e) {
           bad_value("designs", v, e.what());
         }
       }},
      {"T", [](const RunConfig& c) { return std::to_string(c.T); },
       [](RunConfig& c, const std::string& v) { c.T = to_int<Index>("T", v); }},
      {"replicates", [](const RunConfig& c) { return std::to_string(c.replicates); },
       [](RunConfig& c, const std::string& v) { c.replicates = to_int<int>("replicates", v); }},
      INFACT_DOUBLE("loading_scale", loading_scale),
      INFACT_DOUBLE("idio_shape", idio_shape),
      INFACT_DOUBLE("idio_scale", idio_scale),
      {"data", [](const RunConfig& c) { return c.data; },
       [](RunConfig& c, const std::string& v) { c.data = v; }},
      {"out", [](const RunConfig& c) { return c.out; },
       [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"scaling", [](const RunConfig& c) { return to_string(c.scaling); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.scaling = parse_scaling(v);
         } catch (const ParameterError&) {
           bad_value("scaling", v, "expected none, center or standardize");
         }
       }},
      INFACT_DOUBLE("c0", core.c0),
      INFACT_DOUBLE("C0", core.C0),
      INFACT_BOOL("adapt", adapt),
      INFACT_DOUBLE("alpha0", alpha0),
      INFACT_DOUBLE("alpha1", alpha1),
      INFACT_DOUBLE("alpha0_wide", alpha0_wide),
      INFACT_DOUBLE("alpha1_wide", alpha1_wide),
      {"adapt_gate", [](const RunConfig& c) { return std::to_string(c.adapt_gate); },
       [](RunConfig& c, const std::string& v) { c.adapt_gate = to_int<long>("adapt_gate", v); }},
      {"k0", [](const RunConfig& c) { return std::to_string(c.k0); },
       [](RunConfig& c, const std::string& v) { c.k0 = to_int<Index>("k0", v); }},
      INFACT_BOOL("trace", trace),
      {"checkpoint_every", [](const RunConfig& c) { return std::to_string(c.checkpoint_every); },
       [](RunConfig& c, const std::string& v) {
         c.checkpoint_every = to_int<long>("checkpoint_every", v);
       }},
      INFACT_DOUBLE("mgp.nu1", mgp.nu1),
      INFACT_DOUBLE("mgp.nu2", mgp.nu2),
      INFACT_DOUBLE("mgp.b1", mgp.b1),
      INFACT_DOUBLE("mgp.b2", mgp.b2),
      INFACT_DOUBLE("mgp.a_prior_shape", mgp.a_prior_shape),
      INFACT_DOUBLE("mgp.a_prior_rate", mgp.a_prior_rate),
      INFACT_DOUBLE("mgp.s1", mgp.s1),
      INFACT_DOUBLE("mgp.s2", mgp.s2),
      INFACT_DOUBLE("mgp.a1_init", mgp.a1_init),
      INFACT_DOUBLE("mgp.a2_init", mgp.a2_init),
      INFACT_BOOL("mgp.update_shapes", mgp.update_shapes),
      INFACT_DOUBLE("mgp.epsilon", mgp.epsilon),
      INFACT_DOUBLE("mgp.prop_required", mgp.prop_required),
      INFACT_DOUBLE("cusp.alpha", cusp.alpha),
      INFACT_DOUBLE("cusp.a_theta", cusp.a_theta),
      INFACT_DOUBLE("cusp.b_theta", cusp.b_theta),
      INFACT_DOUBLE("cusp.theta_inf", cusp.theta_inf),
      {"cusp.slab", [](const RunConfig& c) { return slab_name(c.cusp.slab); },
       [](RunConfig& c, const std::string& v) {
         if (v == "joint") c.cusp.slab = SlabDensity::joint;
         else if (v == "product") c.cusp.slab = SlabDensity::product;
         else bad_value("cusp.slab", v, "expected joint or product");
       }},
      INFACT_DOUBLE("ibp.a_beta", ibp.a_beta),
      INFACT_DOUBLE("ibp.b_beta", ibp.b_beta),
      INFACT_DOUBLE("ibp.a_alpha", ibp.a_alpha),
      INFACT_DOUBLE("ibp.b_alpha", ibp.b_alpha),
      INFACT_DOUBLE("ibp.nu", ibp.nu),
      INFACT_DOUBLE("ibp.alpha_init", ibp.alpha_init),
      {"ibp.prior_odds", [](const RunConfig& c) { return odds_name(c.ibp.odds); },
       [](RunConfig& c, const std::string& v) {
         if (v == "variables") c.ibp.odds = PriorOdds::variables;
         else if (v == "observations") c.ibp.odds = PriorOdds::observations;
         else if (v == "finite") c.ibp.odds = PriorOdds::finite;
         else bad_value("ibp.prior_odds", v, "expected variables, observations or finite");
       }},
      INFACT_BOOL("ibp.birth", ibp.birth),
      INFACT_BOOL("ibp.update_alpha", ibp.update_alpha),
      INFACT_BOOL("ibp.prune", ibp.prune),
  };
  return table;
}

#undef INFACT_DOUBLE
#undef INFACT_BOOL

/// "c0.<i>" / "C0.<i>" per-variable overrides of the idiosyncratic prior.
bool apply_core_override(RunConfig& c, const std::string& key, const std::string& value) {
  const bool shape = key.rfind("c0.", 0) == 0;
  const bool rate = key.rfind("C0.", 0) == 0;
  if (!shape && !rate) return false;
  const auto i = to_int<Index>(key, key.substr(3));
  auto it = c.core.overrides.find(i);
  std::pair<double, double> cur =
      it == c.core.overrides.end() ? std::make_pair(c.core.c0, c.core.C0) : it->second;
  (shape ? cur.first : cur.second) = to_double(key, value);
  c.core.overrides[i] = cur;
  return true;
}

RunConfig defaults_for(PriorKind prior) {
  RunConfig c;
  c.prior = prior;
  c.designs = {{6, 2}, {10, 3}, {30, 5}, {50, 8}, {100, 15}, {150, 25}};
  switch (prior) {
    case PriorKind::mgp:
      c.iterations = 30000;
      c.burn_in = 10000;
      c.alpha0 = -0.5;
      c.alpha1 = -3e-4;
      c.alpha0_wide = -1.0;
      c.alpha1_wide = -5e-4;
      c.scaling = Scaling::standardize;
      break;
    case PriorKind::cusp:
      c.iterations = 15000;
      c.burn_in = 5000;
      c.alpha0 = c.alpha0_wide = -1.0;
      c.alpha1 = c.alpha1_wide = -5e-4;
      c.scaling = Scaling::none;
      break;
    case PriorKind::ibp:
      c.iterations = 15000;
      c.burn_in = 5000;
      c.adapt = false;
      c.scaling = Scaling::standardize;
      break;
  }
  return c;
}

void check(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("invalid config field '" + field + "': " + why, {field});
}

void validate_config(const RunConfig& c) {
  check(c.iterations >= 1, "iterations", "must be at least 1");
  check(c.burn_in >= 0, "burn_in", "must be non-negative");
  check(c.burn_in < c.iterations, "burn_in", "must be smaller than iterations");
  check(c.chains >= 1, "chains", "must be at least 1");
  check(c.replicates >= 1, "replicates", "must be at least 1");
  check(c.T >= 2, "T", "must be at least 2");
  check(c.loading_scale > 0, "loading_scale", "must be positive");
  check(c.idio_shape > 0, "idio_shape", "must be positive");
  check(c.idio_scale > 0, "idio_scale", "must be positive");
  check(c.core.c0 > 0, "c0", "must be positive");
  check(c.core.C0 > 0, "C0", "must be positive");
  for (const auto& [i, sr] : c.core.overrides) {
    check(i >= 0, "c0." + std::to_string(i), "variable index must be non-negative");
    check(sr.first > 0, "c0." + std::to_string(i), "must be positive");
    check(sr.second > 0, "C0." + std::to_string(i), "must be positive");
  }
  check(c.alpha1 < 0, "alpha1", "must be negative");
  check(c.alpha1_wide < 0, "alpha1_wide", "must be negative");
  check(c.adapt_gate >= 0, "adapt_gate", "must be non-negative");
  check(c.k0 >= 0, "k0", "must be non-negative (0 selects the default)");
  check(c.checkpoint_every >= 1, "checkpoint_every", "must be at least 1");
  check(!c.out.empty(), "out", "must not be empty");
  if (c.mode == RunMode::fit) check(!c.data.empty(), "data", "fit mode needs a dataset path");
  if (c.mode == RunMode::bench) {
    check(!c.designs.empty(), "designs", "bench mode needs at least one design");
    for (const auto& d : c.designs) check(d.K >= 1 && d.K <= d.p && d.p >= 2, "designs", "each design needs 1 <= K <= p and p >= 2");
  }
  const std::pair<const char*, double> positive[] = {
      {"mgp.nu1", c.mgp.nu1},         {"mgp.nu2", c.mgp.nu2},
      {"mgp.b1", c.mgp.b1},           {"mgp.b2", c.mgp.b2},
      {"mgp.a_prior_shape", c.mgp.a_prior_shape}, {"mgp.a_prior_rate", c.mgp.a_prior_rate},
      {"mgp.s1", c.mgp.s1},           {"mgp.s2", c.mgp.s2},
      {"mgp.a1_init", c.mgp.a1_init}, {"mgp.a2_init", c.mgp.a2_init},
      {"mgp.epsilon", c.mgp.epsilon}, {"mgp.prop_required", c.mgp.prop_required},
      {"cusp.alpha", c.cusp.alpha},   {"cusp.a_theta", c.cusp.a_theta},
      {"cusp.b_theta", c.cusp.b_theta}, {"cusp.theta_inf", c.cusp.theta_inf},
      {"ibp.a_beta", c.ibp.a_beta},   {"ibp.b_beta", c.ibp.b_beta},
      {"ibp.a_alpha", c.ibp.a_alpha}, {"ibp.b_alpha", c.ibp.b_alpha},
      {"ibp.nu", c.ibp.nu},           {"ibp.alpha_init", c.ibp.alpha_init}};
  for (const auto& [key, value] : positive) check(value > 0, key, "must be positive");
  auto guard = [](const std::string& prefix, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("invalid ") + prefix + " hyperparameter: " + e.what(), {prefix});
    }
  };
  guard("mgp", [&] { validate(c.mgp); });
  guard("cusp", [&] { validate(c.cusp); });
  guard("ibp", [&] { validate(c.ibp); });
}

}  // namespace

std::string to_string(RunMode mode) { return mode == RunMode::fit ? "fit" : "bench"; }

std::vector<DesignCell> parse_design_list(const std::string& text) {
  std::vector<DesignCell> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto x = item.find_first_of("xX");
    if (x == std::string::npos) throw ParameterError("design '" + item + "' is not of the form pxK");
    DesignCell cell;
    const std::string ps = trim(item.substr(0, x));
    const std::string ks = trim(item.substr(x + 1));
    const auto r1 = std::from_chars(ps.data(), ps.data() + ps.size(), cell.p);
    const auto r2 = std::from_chars(ks.data(), ks.data() + ks.size(), cell.K);
    if (r1.ec != std::errc() || r1.ptr != ps.data() + ps.size() || r2.ec != std::errc() ||
        r2.ptr != ks.data() + ks.size() || ps.empty() || ks.empty())
      throw ParameterError("design '" + item + "' is not of the form pxK");
    if (cell.p < 2 || cell.K < 1 || cell.K > cell.p)
      throw ParameterError("design '" + item + "' needs 1 <= K <= p and p >= 2");
    out.push_back(cell);
  }
  return out;
}

std::string format_design_list(const std::vector<DesignCell>& cells) {
  std::string out;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (j) out += ',';
    out += std::to_string(cells[j].p) + "x" + std::to_string(cells[j].K);
  }
  return out;
}

ConfigEntries parse_config_text(const std::string& text) {
  const std::string body = trim(text);
  ConfigEntries out;
  if (!body.empty() && body.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed manifest: ") + e.what(), {});
    }
    const auto it = doc.find("config");
    if (it == doc.end() || !it->is_array()) throw ConfigError("manifest has no config list", {"config"});
    for (const auto& kv : *it) {
      if (!kv.is_array() || kv.size() != 2 || !kv[0].is_string() || !kv[1].is_string())
        throw ConfigError("manifest config entries must be [key, value] string pairs", {"config"});
      out.emplace_back(kv[0].get<std::string>(), kv[1].get<std::string>());
    }
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'", {});
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path, {});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig resolve_config(const ConfigEntries& entries) {
  PriorKind prior = PriorKind::cusp;
  std::set<std::string> given;
  for (const auto& [k, v] : entries) {
    if (k == "prior") {
      try {
        prior = parse_prior_kind(v);
      } catch (const ParameterError&) {
        bad_value("prior", v, "expected mgp, cusp or ibp");
      }
    }
  }
  RunConfig c = defaults_for(prior);
  std::vector<std::string> unknown;
  for (const auto& [k, v] : entries) {
    given.insert(k);
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == k; });
    if (it != table.end()) {
      it->set(c, v);
      continue;
    }
    if (!apply_core_override(c, k, v)) unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg, unknown);
  }
  if (!given.count("adapt_gate")) c.adapt_gate = c.burn_in;
  if (!given.count("trace")) c.trace = c.mode == RunMode::fit;
  validate_config(c);
  return c;
}

RunConfig parse_config(const std::string& path, const ConfigEntries& overrides) {
  ConfigEntries all = path.empty() ? ConfigEntries{} : read_config_file(path);
  all.insert(all.end(), overrides.begin(), overrides.end());
  return resolve_config(all);
}

ConfigEntries config_entries(const RunConfig& c) {
  ConfigEntries out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(c));
  for (const auto& [i, sr] : c.core.overrides) {
    out.emplace_back("c0." + std::to_string(i), from_double(sr.first));
    out.emplace_back("C0." + std::to_string(i), from_double(sr.second));
  }
  return out;
}

std::string format_config(const RunConfig& c) {
  std::string out = "# infact resolved configuration\n";
  for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return config_entries(a) == config_entries(b); }

PriorConfig prior_config_for(const RunConfig& c, Index p, Index T) {
  PriorConfig pc;
  pc.kind = c.prior;
  pc.core = c.core;
  pc.mgp = c.mgp;
  pc.cusp = c.cusp;
  pc.ibp = c.ibp;
  pc.adapt = c.adapt;
  pc.initial_truncation = c.k0;
  const bool wide = p >= T;
  pc.schedule.alpha0 = wide ? c.alpha0_wide : c.alpha0;
  pc.schedule.alpha1 = wide ? c.alpha1_wide : c.alpha1;
  pc.schedule.burn_in_gate = c.adapt_gate;
  return pc;
}

SimDesign design_for(const RunConfig& c, const DesignCell& cell) {
  SimDesign d;
  d.p = cell.p;
  d.K_true = cell.K;
  d.T = c.T;
  d.loading_scale = c.loading_scale;
  d.idio_shape = c.idio_shape;
  d.idio_scale = c.idio_scale;
  d.replicates = c.replicates;
  return d;
}

}  // namespace infact
