#include "certmf/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace certmf {

EpsSchedule eps_schedule(double L, double diam, double eps) {
  if (!(L > 0.0) || !(diam > 0.0)) throw std::invalid_argument("eps_schedule: L and diam must be > 0");
  EpsSchedule s;
  s.eps0 = L * diam;
  if (!(eps > 0.0 && eps < s.eps0)) {
    throw std::invalid_argument("eps_schedule: eps must lie in (0, L*diam)");
  }
  // Smallest m with eps0 2^-m <= eps; the relative slack absorbs round-off
  // when eps is itself eps0 times a power of two.
  while (std::ldexp(s.eps0, -s.m) > eps * (1.0 + 1e-12)) ++s.m;
  for (int k = 1; k < s.m; ++k) s.values.push_back(std::ldexp(s.eps0, -k));
  s.values.push_back(eps);
  return s;
}

namespace {

// Per-axis coordinates with the same spacing rule as grid_points.
std::vector<std::vector<double>> grid_axes(const Box& box, double step) {
  std::vector<std::vector<double>> axes(box.dim());
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const double w = box.hi[j] - box.lo[j];
    const auto n = static_cast<long>(std::ceil(w / step - 1e-9));
    for (long k = 0; k <= n; ++k) {
      axes[j].push_back(k == n ? box.hi[j] : box.lo[j] + w * static_cast<double>(k) / n);
    }
  }
  return axes;
}

double actual_step(const std::vector<std::vector<double>>& axes) {
  double s = 0.0;
  for (const auto& a : axes) {
    if (a.size() > 1) s = std::max(s, a[1] - a[0]);
  }
  return s;
}

// Calls fn(point) for every point of the cartesian product, row-major.
template <class Fn>
void for_each_product(const std::vector<std::vector<double>>& axes, Fn&& fn) {
  const std::size_t d = axes.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> p(d);
  for (std::size_t j = 0; j < d; ++j) p[j] = axes[j][0];
  while (true) {
    fn(std::span<const double>(p));
    std::size_t j = d;
    while (j-- > 0) {
      if (++idx[j] < axes[j].size()) {
        p[j] = axes[j][idx[j]];
        break;
      }
      idx[j] = 0;
      p[j] = axes[j][0];
    }
    if (j == static_cast<std::size_t>(-1)) return;
  }
}

void check_resolution(double grid_resolution) {
  if (!(grid_resolution > 0.0)) throw std::invalid_argument("grid_resolution must be > 0");
}

}  // namespace

GapGrid make_gap_grid(const ObjectiveSpec& objective, double grid_resolution) {
  check_resolution(grid_resolution);
  const auto& domain = objective.domain;
  const auto axes = grid_axes(domain.box(), grid_resolution);
  GapGrid g;
  g.dim = domain.dim();
  g.step = actual_step(axes);
  for_each_product(axes, [&](std::span<const double> x) {
    if (domain.has_membership() && !domain.contains(x)) return;
    g.coords.insert(g.coords.end(), x.begin(), x.end());
    g.gaps.push_back(suboptimality_gap(objective, x));
  });
  return g;
}

namespace {

std::vector<double> select(const GapGrid& grid, double a, double b, bool closed_below) {
  std::vector<double> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double gap = grid.gaps[i];
    const bool above = closed_below ? gap >= a : gap > a;
    if (above && gap <= b) {
      const auto p = grid.point(i);
      out.insert(out.end(), p.begin(), p.end());
    }
  }
  return out;
}

}  // namespace

std::size_t layer_packing(const GapGrid& grid, Norm norm, double a, double b, double r) {
  if (!(a >= 0.0 && a < b)) throw std::invalid_argument("layer_packing: need 0 <= a < b");
  if (!(r > 0.0)) throw std::invalid_argument("layer_packing: r must be > 0");
  const auto pts = select(grid, a, b, false);
  return packing_number_flat(pts, grid.dim, r, norm);
}

std::size_t layer_packing(const ObjectiveSpec& objective, double, double a, double b, double r,
                          double grid_resolution) {
  return layer_packing(make_gap_grid(objective, grid_resolution), objective.domain.norm(), a, b, r);
}

ComplexityProfile complexity_profile(const ObjectiveSpec& objective, double L, double eps,
                                     double grid_resolution) {
  ComplexityProfile p;
  p.L = L;
  p.schedule = eps_schedule(L, objective.domain.diameter(), eps);
  const GapGrid grid = make_gap_grid(objective, grid_resolution);
  p.grid_resolution = grid.step;
  const Norm norm = objective.domain.norm();

  const auto base = select(grid, -std::numeric_limits<double>::infinity(), eps, true);
  p.packings_exact = base.size() / grid.dim <= kExactPackingLimit;
  p.base_packing = packing_number_flat(base, grid.dim, eps / L, norm);
  for (int k = 1; k <= p.schedule.m; ++k) {
    const double lo = p.schedule.at(k);
    const auto layer = select(grid, lo, p.schedule.at(k - 1), false);
    if (layer.size() / grid.dim > kExactPackingLimit) p.packings_exact = false;
    p.layer_packings.push_back(packing_number_flat(layer, grid.dim, lo / L, norm));
  }
  return p;
}

SValue evaluate_s(const ComplexityProfile& profile, double beta, const CostFunction& cost) {
  if (!(beta > 0.0)) throw std::invalid_argument("evaluate_s: beta must be > 0");
  SValue s;
  s.beta = beta;
  const double eps = profile.schedule.eps();
  s.base_term = static_cast<double>(profile.base_packing) * cost(beta * eps);
  s.S = s.base_term;
  for (int k = 1; k <= profile.schedule.m; ++k) {
    LayerTerm t;
    t.k = k;
    t.eps_k = profile.schedule.at(k);
    t.packing = profile.layer_packings[static_cast<std::size_t>(k - 1)];
    t.cost = cost(beta * t.eps_k);
    t.term = t.packing == 0 ? 0.0 : static_cast<double>(t.packing) * t.cost;
    s.S += t.term;
    s.layers.push_back(t);
  }
  return s;
}

SBetaResult s_beta(const ObjectiveSpec& objective, double L, double eps, double beta,
                   const CostFunction& cost, double grid_resolution) {
  SBetaResult r;
  r.profile = complexity_profile(objective, L, eps, grid_resolution);
  r.profile.s_values.push_back(evaluate_s(r.profile, beta, cost));
  r.S = r.profile.s_values.back().S;
  return r;
}

double upper_bound_constant(std::uint64_t arity, double nu, double radius, std::size_t dim) {
  const double K = static_cast<double>(arity);
  if (nu >= 3.0 * radius) return K;
  return K * std::pow(1.0 + 6.0 * radius / nu, static_cast<double>(dim));
}

double upper_bound_prediction(const ComplexityProfile& profile, const CostFunction& cost,
                              const PartitionConstants& c, double L, std::size_t dim) {
  const double a = upper_bound_constant(c.arity, c.nu, c.radius, dim);
  const SValue s = evaluate_s(profile, c.delta / 3.0, cost);
  return a * s.S + cost(L * c.radius);
}

LowerBoundPrediction lower_bound_prediction(const ComplexityProfile& profile, double lip,
                                            const CostFunction& cost, std::size_t dim) {
  LowerBoundPrediction out;
  if (profile.L <= lip) {
    out.warning = "L <= Lip(f): the lower-bound factor vanishes";
    return out;
  }
  const double d = static_cast<double>(dim);
  const double factor = std::pow(1.0 / 65.0, d) * std::pow(1.0 - lip / profile.L, d) /
                        (1.0 + profile.schedule.m);
  out.value = factor * evaluate_s(profile, 16.0, cost).S;
  return out;
}

LowerBoundPrediction lower_bound_prediction(const ObjectiveSpec& objective, double L, double eps,
                                            const CostFunction& cost, std::size_t dim,
                                            double grid_resolution) {
  if (L <= objective.lip_true) {
    LowerBoundPrediction out;
    out.warning = "L <= Lip(f): the lower-bound factor vanishes";
    return out;
  }
  return lower_bound_prediction(complexity_profile(objective, L, eps, grid_resolution),
                                objective.lip_true, cost, dim);
}

EnvelopeTracker::EnvelopeTracker(const SearchDomain& domain, double L, double grid_resolution)
    : domain_(domain), L_(L), dim_(domain.dim()) {
  if (!(L > 0.0)) throw std::invalid_argument("envelope: L must be > 0");
  check_resolution(grid_resolution);
  const auto axes = grid_axes(domain.box(), grid_resolution);
  step_ = actual_step(axes);
  for_each_product(axes, [&](std::span<const double> x) {
    if (domain_.has_membership() && !domain_.contains(x)) return;
    grid_.insert(grid_.end(), x.begin(), x.end());
  });
  upper_.assign(grid_.size() / dim_, std::numeric_limits<double>::infinity());
  upper_max_ = std::numeric_limits<double>::infinity();
}

void EnvelopeTracker::add(std::span<const double> x, double alpha, double y) {
  if (x.size() != dim_) throw std::invalid_argument("envelope: dimension mismatch");
  const std::size_t n = ys_.size();
  const double hi = y + alpha;
  // U at the new point from earlier observations, and the new cone at the
  // earlier points.
  double u_new = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    const std::span<const double> xs(xs_.data() + s * dim_, dim_);
    const double dist = L_ * distance(x, xs, domain_.norm());
    u_new = std::min(u_new, ys_[s] + alphas_[s] + dist);
    upper_at_obs_[s] = std::min(upper_at_obs_[s], hi + dist);
    if (!flagged_[s] && upper_at_obs_[s] < ys_[s] - alphas_[s]) {
      flagged_[s] = 1;
      inconsistent_.push_back(s + 1);
    }
  }
  u_new = std::min(u_new, hi);
  xs_.insert(xs_.end(), x.begin(), x.end());
  alphas_.push_back(alpha);
  ys_.push_back(y);
  upper_at_obs_.push_back(u_new);
  flagged_.push_back(0);
  if (u_new < y - alpha) {
    flagged_.back() = 1;
    inconsistent_.push_back(n + 1);
  }

  upper_max_ = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < upper_.size(); ++g) {
    const std::span<const double> p(grid_.data() + g * dim_, dim_);
    upper_[g] = std::min(upper_[g], hi + L_ * distance(p, x, domain_.norm()));
    upper_max_ = std::max(upper_max_, upper_[g]);
  }
}

double EnvelopeTracker::lower_at(std::span<const double> z) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < ys_.size(); ++s) {
    const std::span<const double> xs(xs_.data() + s * dim_, dim_);
    best = std::max(best, ys_[s] - alphas_[s] - L_ * distance(z, xs, domain_.norm()));
  }
  return best;
}

double EnvelopeTracker::err(std::span<const double> rec) const {
  const double low = lower_at(rec);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < upper_.size(); ++g) {
    const std::span<const double> p(grid_.data() + g * dim_, dim_);
    best = std::max(best, std::min(upper_[g] - low, L_ * distance(p, rec, domain_.norm())));
  }
  return best;
}

double EnvelopeTracker::upper_at(std::span<const double> z) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < ys_.size(); ++s) {
    const std::span<const double> xs(xs_.data() + s * dim_, dim_);
    best = std::min(best, ys_[s] + alphas_[s] + L_ * distance(z, xs, domain_.norm()));
  }
  return best;
}

ErrTau err_tau_oracle(std::span<const TraceRow> rows, std::span<const double> rec, double L,
                      const SearchDomain& domain, double grid_resolution) {
  if (rows.empty()) throw std::invalid_argument("err_tau_oracle: need at least one row");
  EnvelopeTracker env(domain, L, grid_resolution);
  for (const auto& row : rows) env.add(row.x, row.alpha, row.y);
  ErrTau out;
  out.upper_max = env.upper_max();
  out.lower_at_rec = env.lower_at(rec);
  out.value = env.err(rec);
  out.grid_step = env.grid_step();
  out.inconsistent = env.inconsistent();
  return out;
}

double integral_approximation(const ObjectiveSpec& objective, double eps, const CostFunction& cost,
                              double b, double grid_resolution) {
  if (!(eps > 0.0) || !(b > 0.0)) throw std::invalid_argument("integral: eps and b must be > 0");
  check_resolution(grid_resolution);
  const auto& domain = objective.domain;
  const std::size_t d = domain.dim();
  std::vector<std::vector<double>> mids(d);
  double cell = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double w = domain.box().hi[j] - domain.box().lo[j];
    const auto n = std::max<long>(1, static_cast<long>(std::ceil(w / grid_resolution - 1e-9)));
    for (long k = 0; k < n; ++k) mids[j].push_back(domain.box().lo[j] + w * (k + 0.5) / n);
    cell *= w / static_cast<double>(n);
  }
  double acc = 0.0;
  for_each_product(mids, [&](std::span<const double> x) {
    if (domain.has_membership() && !domain.contains(x)) return;
    const double s = suboptimality_gap(objective, x) + eps;
    acc += cost(b * s) / std::pow(s, static_cast<double>(d));
  });
  return acc * cell;
}

}  // namespace certmf
