#include <sstream>

#include "doctest.h"
#include "infact/chain.hpp"
#include "infact/io.hpp"

using namespace infact;

namespace {

Dataset toy_data(std::uint64_t seed, Index T = 40, Index p = 6) {
  RngStream rng(seed);
  Matrix y(T, p);
  for (Index t = 0; t < T; ++t) {
    const double f = draw_normal(rng);
    for (Index i = 0; i < p; ++i) y(t, i) = (i % 2 ? 1.5 : -1.0) * f + 0.4 * draw_normal(rng);
  }
  return Dataset(y);
}

PriorConfig config_for(PriorKind kind) {
  PriorConfig pc;
  pc.kind = kind;
  pc.schedule.burn_in_gate = 10;
  return pc;
}

}  // namespace

TEST_CASE("default starting truncation") {
  CHECK(default_initial_truncation(PriorKind::cusp, 10, 100) == 11);
  CHECK(default_initial_truncation(PriorKind::mgp, 10, 100) == 10);
  CHECK(default_initial_truncation(PriorKind::ibp, 10, 100) == 10);
  CHECK(default_initial_truncation(PriorKind::ibp, 30, 100) == 18);
}

TEST_CASE("prior names") {
  for (auto k : {PriorKind::mgp, PriorKind::cusp, PriorKind::ibp})
    CHECK(parse_prior_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_prior_kind("spike"), ParameterError);
}

TEST_CASE("checkpoint round trip continues bit-identically") {
  const Dataset data = toy_data(41);
  for (auto kind : {PriorKind::mgp, PriorKind::cusp, PriorKind::ibp}) {
    CAPTURE(to_string(kind));
    Chain straight(data, config_for(kind), RngStream(42));
    Chain resumed(data, config_for(kind), RngStream(42));
    for (int g = 0; g < 60; ++g) {
      straight.step();
      resumed.step();
    }
    std::stringstream buf;
    resumed.save(buf);
    Chain loaded = Chain::load(buf, data, config_for(kind));
    CHECK(loaded.iteration() == 60);
    for (int g = 0; g < 60; ++g) {
      const auto a = straight.step();
      const auto b = loaded.step();
      CHECK(format_trace_row(kind, a) == format_trace_row(kind, b));
    }
    CHECK(straight.core().loadings == loaded.core().loadings);
    CHECK(straight.core().idio_variances == loaded.core().idio_variances);
    CHECK(straight.rng().state() == loaded.rng().state());
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  const Dataset data = toy_data(43);
  Chain c(data, config_for(PriorKind::cusp), RngStream(44));
  c.step();
  std::stringstream buf;
  c.save(buf);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(Chain::load(truncated, data, config_for(PriorKind::cusp)), io::FormatError);
  std::stringstream garbage("not a checkpoint at all");
  CHECK_THROWS_AS(Chain::load(garbage, data, config_for(PriorKind::cusp)), io::FormatError);
}

TEST_CASE("every iteration passes the structural audit") {
  const Dataset data = toy_data(45);
  for (auto kind : {PriorKind::mgp, PriorKind::cusp, PriorKind::ibp}) {
    CAPTURE(to_string(kind));
    PriorConfig pc = config_for(kind);
    pc.schedule.alpha0 = 0.0;
    pc.schedule.alpha1 = -1e-9;
    pc.schedule.burn_in_gate = 0;
    Chain chain(data, pc, RngStream(46));
    CHECK_FALSE(audit_chain(chain).has_value());
    for (int g = 0; g < 200; ++g) {
      const auto rec = chain.step();
      const auto problem = audit_chain(chain);
      CHECK_MESSAGE(!problem.has_value(), problem.value_or(""));
      CHECK(rec.truncation == chain.truncation());
      CHECK(rec.active == chain.active_count());
      CHECK(rec.g == g);
    }
  }
}

TEST_CASE("trace rows match the header") {
  for (auto kind : {PriorKind::mgp, PriorKind::cusp, PriorKind::ibp}) {
    const std::string header = trace_header(kind);
    IterationRecord rec;
    const std::string row = format_trace_row(kind, rec);
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  }
}

TEST_CASE("chains are deterministic given the stream") {
  const Dataset data = toy_data(47);
  Chain a(data, config_for(PriorKind::mgp), RngStream(48));
  Chain b(data, config_for(PriorKind::mgp), RngStream(48));
  for (int g = 0; g < 30; ++g) CHECK(format_trace_row(PriorKind::mgp, a.step()) == format_trace_row(PriorKind::mgp, b.step()));
}
