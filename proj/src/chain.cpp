#include "infact/chain.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "infact/io.hpp"

namespace infact {
namespace {

constexpr std::uint64_t kCheckpointMagic = 0x4b43464921ULL;  // "!IFCK"
constexpr std::uint64_t kCheckpointVersion = 1;

std::string fmt(double x) { return io::format_double(x); }

CoreState initial_core(const Dataset& data, Index k, RngStream& rng) {
  CoreState core;
  core.loadings = Matrix::Zero(data.p(), k);
  core.idio_variances = Vector::Ones(data.p());
  core.factors.resize(k, data.T());
  for (Index t = 0; t < data.T(); ++t) core.factors.col(t) = draw_standard_normal(rng, k);
  return core;
}

void write_core(io::BinaryWriter& w, const CoreState& c) {
  w.matrix(c.loadings);
  w.vector(c.idio_variances);
  w.matrix(c.factors);
}

CoreState read_core(io::BinaryReader& r) {
  CoreState c;
  c.loadings = r.matrix();
  c.idio_variances = r.vector();
  c.factors = r.matrix();
  return c;
}

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::mgp: return "mgp";
    case PriorKind::cusp: return "cusp";
    case PriorKind::ibp: return "ibp";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "mgp") return PriorKind::mgp;
  if (name == "cusp") return PriorKind::cusp;
  if (name == "ibp") return PriorKind::ibp;
  throw ParameterError("unknown prior '" + name + "' (expected mgp, cusp or ibp)");
}

Index default_initial_truncation(PriorKind kind, Index p, Index T) {
  switch (kind) {
    case PriorKind::mgp: return mgp_default_truncation(p, T);
    case PriorKind::cusp: return p + 1;
    case PriorKind::ibp:
      return std::max<Index>(1, std::min<Index>(p, static_cast<Index>(std::ceil(5.0 * std::log(static_cast<double>(p))))));
  }
  return 1;
}

std::string trace_header(PriorKind kind) {
  switch (kind) {
    case PriorKind::mgp: return "g,k_star,a1,a2,a1_accepted,a2_accepted,adapted,removed,added";
    case PriorKind::cusp: return "g,H,H_star,adapted,removed,added";
    case PriorKind::ibp: return "g,k,K_plus,alpha,births";
  }
  return {};
}

std::string format_trace_row(PriorKind kind, const IterationRecord& r) {
  std::ostringstream os;
  os << r.g << ',';
  switch (kind) {
    case PriorKind::mgp:
      os << r.truncation << ',' << fmt(r.a1) << ',' << fmt(r.a2) << ',' << int(r.a1_accepted) << ','
         << int(r.a2_accepted) << ',' << int(r.adapt.fired) << ',' << r.adapt.removed << ','
         << r.adapt.added;
      break;
    case PriorKind::cusp:
      os << r.truncation << ',' << r.active << ',' << int(r.adapt.fired) << ',' << r.adapt.removed
         << ',' << r.adapt.added;
      break;
    case PriorKind::ibp:
      os << r.truncation << ',' << r.active << ',' << fmt(r.alpha) << ',' << r.births;
      break;
  }
  return os.str();
}

Chain::Chain(const Dataset& data, PriorConfig config, RngStream rng, std::nullopt_t)
    : data_(&data), config_(std::move(config)), rng_(rng) {}

Chain::Chain(const Dataset& data, PriorConfig config, RngStream rng)
    : Chain(data, std::move(config), rng, std::nullopt) {
  validate(config_.mgp);
  validate(config_.cusp);
  validate(config_.ibp);
  const Index p = data.p();
  const Index T = data.T();
  const Index k0 = config_.initial_truncation > 0
                       ? config_.initial_truncation
                       : default_initial_truncation(config_.kind, p, T);
  switch (config_.kind) {
    case PriorKind::mgp: {
      MgpState m = mgp_initial_state(p, k0, config_.mgp, rng_);
      core_ = initial_core(data, k0, rng_);
      prior_ = std::move(m);
      break;
    }
    case PriorKind::cusp: {
      CuspState c = cusp_initial_state(k0, config_.cusp, rng_);
      core_ = initial_core(data, k0, rng_);
      prior_ = std::move(c);
      break;
    }
    case PriorKind::ibp: {
      IbpState b = ibp_initial_state(p, k0, config_.ibp, rng_);
      core_ = initial_core(data, k0, rng_);
      prior_ = std::move(b);
      break;
    }
  }
}

Index Chain::truncation() const { return core_.k(); }

Index Chain::active_count() const {
  return std::visit(
      [](const auto& s) -> Index {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, MgpState>) return s.k_star();
        else return s.active_count();
      },
      prior_);
}

IterationRecord Chain::step() {
  IterationRecord rec;
  rec.g = g_;
  const bool adapt = config_.adapt;
  switch (config_.kind) {
    case PriorKind::mgp: {
      auto& m = std::get<MgpState>(prior_);
      const MgpSweepInfo info = mgp_sweep(m, core_, *data_, config_.core, config_.mgp,
                                          config_.schedule, g_, adapt, rng_);
      rec.a1 = m.a1;
      rec.a2 = m.a2;
      rec.a1_accepted = info.a1_accepted;
      rec.a2_accepted = info.a2_accepted;
      rec.adapt = info.adapt;
      break;
    }
    case PriorKind::cusp: {
      auto& c = std::get<CuspState>(prior_);
      rec.adapt = cusp_sweep(c, core_, *data_, config_.core, config_.cusp, config_.schedule, g_,
                             adapt, rng_);
      break;
    }
    case PriorKind::ibp: {
      auto& b = std::get<IbpState>(prior_);
      const IbpSweepInfo info = ibp_sweep(b, core_, *data_, config_.core, config_.ibp, rng_);
      rec.alpha = b.alpha;
      rec.births = info.births;
      rec.adapt.removed = info.pruned;
      break;
    }
  }
  rec.truncation = truncation();
  rec.active = active_count();
  ++g_;
  return rec;
}

void Chain::save(std::ostream& out) const {
  io::BinaryWriter w(out);
  w.u64(kCheckpointMagic);
  w.u64(kCheckpointVersion);
  w.u64(static_cast<std::uint64_t>(config_.kind));
  w.i64(g_);
  const RngStream::State st = rng_.state();
  w.u64(st.seed);
  w.u64(st.stream);
  w.u64(st.block);
  w.u64(st.position);
  write_core(w, core_);
  std::visit(
      [&w](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, MgpState>) {
          w.matrix(s.phi);
          w.vector(s.delta);
          w.vector(s.tau);
          w.f64(s.a1);
          w.f64(s.a2);
        } else if constexpr (std::is_same_v<S, CuspState>) {
          w.vector(s.theta);
          w.int_vector(s.z);
          w.vector(s.v);
          w.vector(s.w);
        } else {
          w.bytes_matrix(s.Z);
          w.vector(s.beta);
          w.f64(s.alpha);
        }
      },
      prior_);
}

Chain Chain::load(std::istream& in, const Dataset& data, PriorConfig config) {
  io::BinaryReader r(in);
  if (r.u64() != kCheckpointMagic) throw io::FormatError("not a chain checkpoint");
  if (r.u64() != kCheckpointVersion) throw io::FormatError("unsupported checkpoint version");
  const auto kind = static_cast<PriorKind>(r.u64());
  if (kind != config.kind) throw io::FormatError("checkpoint was written for a different prior");
  Chain chain(data, std::move(config), RngStream(), std::nullopt);
  chain.g_ = static_cast<long>(r.i64());
  RngStream::State st;
  st.seed = r.u64();
  st.stream = r.u64();
  st.block = r.u64();
  st.position = r.u64();
  chain.rng_ = RngStream::from_state(st);
  chain.core_ = read_core(r);
  switch (kind) {
    case PriorKind::mgp: {
      MgpState s;
      s.phi = r.matrix();
      s.delta = r.vector();
      s.tau = r.vector();
      s.a1 = r.f64();
      s.a2 = r.f64();
      chain.prior_ = std::move(s);
      break;
    }
    case PriorKind::cusp: {
      CuspState s;
      s.theta = r.vector();
      s.z = r.int_vector();
      s.v = r.vector();
      s.w = r.vector();
      chain.prior_ = std::move(s);
      break;
    }
    case PriorKind::ibp: {
      IbpState s;
      s.Z = r.bytes_matrix();
      s.beta = r.vector();
      s.alpha = r.f64();
      chain.prior_ = std::move(s);
      break;
    }
  }
  if (chain.core_.p() != data.p() || chain.core_.factors.cols() != data.T())
    throw io::FormatError("checkpoint does not match the dataset dimensions");
  if (auto problem = audit_chain(chain)) throw io::FormatError("corrupt checkpoint: " + *problem);
  return chain;
}

std::optional<std::string> audit_chain(const Chain& chain) {
  const CoreState& c = chain.core();
  const Index p = chain.data().p();
  const Index T = chain.data().T();
  const Index k = c.k();
  if (k < 1) return "truncation level dropped below one";
  if (c.loadings.rows() != p) return "loadings have the wrong number of rows";
  if (c.factors.rows() != k || c.factors.cols() != T) return "factor matrix is not k x T";
  if (c.idio_variances.size() != p) return "idiosyncratic variances have the wrong length";
  if (!c.loadings.allFinite() || !c.factors.allFinite()) return "non-finite loadings or factors";
  if (!(c.idio_variances.array() > 0).all() || !c.idio_variances.allFinite())
    return "idiosyncratic variance not positive";

  return std::visit(
      [&](const auto& s) -> std::optional<std::string> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, MgpState>) {
          if (s.phi.rows() != p || s.phi.cols() != k) return "phi is not p x k";
          if (s.delta.size() != k || s.tau.size() != k) return "delta/tau length differs from k";
          if (!(s.delta.array() > 0).all() || !(s.phi.array() > 0).all())
            return "non-positive shrinkage parameter";
          const Vector tau = tau_from_delta(s.delta);
          for (Index h = 0; h < k; ++h)
            if (std::abs(tau(h) - s.tau(h)) > 1e-9 * std::abs(tau(h))) return "tau is not the product of delta";
          if (!(s.a1 > 0 && s.a2 > 0)) return "non-positive gamma shape";
        } else if constexpr (std::is_same_v<S, CuspState>) {
          const Index H = s.H();
          if (H != k) return "H differs from the loading column count";
          if (s.z.size() != H || s.v.size() != H || s.w.size() != H) return "CUSP vectors differ in length";
          if (s.v(H - 1) != 1.0) return "last stick fraction is not one";
          if (!(s.w.array() >= 0).all() || std::abs(s.w.sum() - 1.0) > 1e-9) return "weights are not a distribution";
          for (Index h = 0; h < H; ++h) {
            if (s.z(h) < 0 || s.z(h) >= H) return "assignment out of range";
            if (s.z(h) <= h && s.theta(h) != chain.config().cusp.theta_inf)
              return "spike column variance differs from theta_inf";
            if (!(s.theta(h) > 0)) return "non-positive column variance";
          }
          if (s.active_count() > H - 1) return "more than H - 1 active columns";
        } else {
          if (s.Z.rows() != p || s.Z.cols() != k) return "Z is not p x k";
          if (s.beta.size() != k) return "beta length differs from k";
          if (!(s.beta.array() > 0).all() || !(s.alpha > 0)) return "non-positive IBP precision";
          for (Index h = 0; h < k; ++h)
            for (Index i = 0; i < p; ++i)
              if (!s.Z(i, h) && c.loadings(i, h) != 0.0) return "loading nonzero where Z is zero";
        }
        return std::nullopt;
      },
      chain.prior_state());
}

}  // namespace infact
