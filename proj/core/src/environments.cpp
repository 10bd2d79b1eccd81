#include "certmf/environments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace certmf {

EnvironmentKind parse_environment_kind(std::string_view name) {
  if (name == "noiseless") return EnvironmentKind::noiseless;
  if (name == "pessimistic") return EnvironmentKind::pessimistic;
  if (name == "optimistic") return EnvironmentKind::optimistic;
  if (name == "collaborative") return EnvironmentKind::collaborative;
  if (name == "bump") return EnvironmentKind::bump;
  throw std::invalid_argument("unknown environment kind '" + std::string(name) + "'");
}

std::string_view to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::noiseless:
      return "noiseless";
    case EnvironmentKind::pessimistic:
      return "pessimistic";
    case EnvironmentKind::optimistic:
      return "optimistic";
    case EnvironmentKind::collaborative:
      return "collaborative";
    case EnvironmentKind::bump:
      return "bump";
  }
  return "?";
}

BumpParams make_bump_params(const ObjectiveSpec& f, Point center, double scale, int sign) {
  const double L = f.L_declared;
  if (!(L > f.lip_true)) {
    throw std::invalid_argument("bump: requires L_declared > Lip(f)");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("bump: scale must be > 0");
  if (sign != 1 && sign != -1) throw std::invalid_argument("bump: sign must be +1 or -1");
  if (center.size() != f.domain.dim()) throw std::invalid_argument("bump: center dimension mismatch");
  BumpParams p{std::move(center), scale, 16.0 * L / (L - f.lip_true), sign};
  if (p.support_radius(L) > f.domain.diameter()) {
    throw std::invalid_argument("bump: support radius exceeds diam(X); lower the scale");
  }
  return p;
}

double bump_value(const BumpParams& params, std::span<const double> x, double L, Norm norm) {
  return std::max(8.0 * params.scale - 16.0 * (L / params.K_lb) * distance(x, params.center, norm),
                  0.0);
}

ObjectiveSpec bumped_objective(const ObjectiveSpec& f, const BumpParams& params) {
  const double L = f.L_declared;
  const Norm norm = f.domain.norm();
  ObjectiveSpec g = f;
  g.name = f.name + (params.sign > 0 ? "+bump" : "-bump");
  g.eval = [fe = f.eval, params, L, norm](std::span<const double> x) {
    return fe(x) + params.sign * bump_value(params, x, L, norm);
  };
  // h is (L - Lip f)-Lipschitz, so L bounds Lip(g).
  g.lip_true = L;
  g.L_declared = L;

  double side = 0.0;
  for (std::size_t j = 0; j < f.domain.dim(); ++j) {
    side = std::max(side, f.domain.box().hi[j] - f.domain.box().lo[j]);
  }
  const double step = side / (f.domain.dim() == 1 ? 4096.0 : 256.0);
  double best = -std::numeric_limits<double>::infinity();
  Point arg;
  auto consider = [&](const Point& p) {
    if (!g.domain.contains(p)) return;
    const double v = g.eval(p);
    if (v > best) {
      best = v;
      arg = p;
    }
  };
  consider(params.center);
  if (f.maximizer_hint) consider(*f.maximizer_hint);
  for (const auto& p : grid_points(f.domain.box(), step)) consider(p);
  g.f_max = best;
  g.maximizer_hint = arg;
  g.f_max_approximate = true;
  return g;
}

DeterministicEnvironment::DeterministicEnvironment(EnvironmentKind kind, ObjectiveSpec objective,
                                                   std::optional<BumpParams> bump)
    : kind_(kind), objective_(std::move(objective)), bump_(std::move(bump)) {
  if (kind_ == EnvironmentKind::bump) {
    if (!bump_) throw std::invalid_argument("bump environment requires bump parameters");
    hidden_ = bumped_objective(objective_, *bump_);
  }
}

double DeterministicEnvironment::respond(std::size_t t, std::span<const double> x, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("respond: alpha must be > 0");
  const double fx = objective_.eval(x);
  double y = fx;
  switch (kind_) {
    case EnvironmentKind::noiseless:
      break;
    case EnvironmentKind::pessimistic:
      y = fx - alpha;
      break;
    case EnvironmentKind::optimistic:
      y = fx + alpha;
      break;
    case EnvironmentKind::collaborative: {
      std::vector<std::uint64_t> key(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) key[j] = std::bit_cast<std::uint64_t>(x[j]);
      const std::uint64_t n = visits_[key]++;
      y = n % 2 == 0 ? fx - alpha : fx + alpha;
      break;
    }
    case EnvironmentKind::bump:
      y = fx + bump_->sign * bump_value(*bump_, x, objective_.L_declared, objective_.domain.norm());
      break;
  }
  if (kind_ != EnvironmentKind::bump) {
    // f(x) -+ alpha may round to just outside the band.
    while (std::abs(y - fx) > alpha) y = std::nextafter(y, fx);
  }
  QueryRecord rec{t, Point(x.begin(), x.end()), alpha, y, fx, std::abs(y - fx) > alpha};
  violations_ += rec.violation ? 1 : 0;
  log_.push_back(std::move(rec));
  return y;
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "uniform") return NoiseKind::uniform;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::gaussian ? "gaussian" : "uniform";
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on (0, 1].
double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

StochasticEnvironment::StochasticEnvironment(ObjectiveSpec objective, double variance,
                                             NoiseKind noise, std::uint64_t seed)
    : objective_(std::move(objective)), variance_(variance), noise_(noise), seed_(seed) {
  if (!(variance_ >= 0.0)) throw std::invalid_argument("stochastic environment: variance must be >= 0");
}

double StochasticEnvironment::noise(std::uint64_t stream, std::uint64_t u) const {
  if (variance_ == 0.0) return 0.0;
  const double sd = std::sqrt(variance_);
  if (noise_ == NoiseKind::uniform) {
    return sd * (2.0 * to_unit(counter_hash(seed_, stream, u)) - 1.0);
  }
  // Box-Muller on two independent counters.
  const double u1 = to_unit(counter_hash(seed_, stream, 2 * u));
  const double u2 = to_unit(counter_hash(seed_, stream, 2 * u + 1));
  return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

StochasticEnvironment::Batch StochasticEnvironment::sample_batch(std::uint64_t stream,
                                                                 std::span<const double> x,
                                                                 std::size_t m) const {
  if (m == 0) throw std::invalid_argument("sample_batch: m must be >= 1");
  const double fx = objective_.eval(x);
  Batch b;
  b.samples.reserve(m);
  // Averaging the noise rather than the samples keeps mean == f(x) exactly
  // when the variance is zero.
  double noise_sum = 0.0;
  for (std::size_t u = 0; u < m; ++u) {
    const double z = noise(stream, u);
    b.samples.push_back(fx + z);
    noise_sum += z;
  }
  b.mean = fx + noise_sum / static_cast<double>(m);
  return b;
}

}  // namespace certmf
