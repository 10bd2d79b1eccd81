#include "certmf/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

namespace certmf {

double norm_equivalence(Norm abs_norm, Norm domain_norm, std::size_t dim) {
  const auto d = static_cast<double>(dim);
  if (abs_norm == Norm::sup || abs_norm == domain_norm) return 1.0;
  if (abs_norm == Norm::l2) return domain_norm == Norm::sup ? std::sqrt(d) : 1.0;
  // abs_norm == l1
  return domain_norm == Norm::sup ? d : std::sqrt(d);
}

namespace {

// Point of the box closest to the origin coordinatewise; it minimizes every
// norm in the menu since they are monotone in each |x_j|.
Point clamp_origin(const Box& box) {
  Point p(box.dim());
  for (std::size_t j = 0; j < box.dim(); ++j) p[j] = std::clamp(0.0, box.lo[j], box.hi[j]);
  return p;
}

double farthest_corner_norm(const Box& box, Norm norm) {
  const std::size_t d = box.dim();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    Point c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = (mask >> j) & 1U ? box.hi[j] : box.lo[j];
    best = std::max(best, norm_of(c, norm));
  }
  return best;
}

void estimate_max_on_grid(ObjectiveSpec& spec, double step) {
  double best = -std::numeric_limits<double>::infinity();
  Point arg;
  for (const auto& p : grid_points(spec.domain.box(), step)) {
    if (!spec.domain.contains(p)) continue;
    const double v = spec.eval(p);
    if (v > best) {
      best = v;
      arg = p;
    }
  }
  if (spec.maximizer_hint && spec.domain.contains(*spec.maximizer_hint)) {
    const double v = spec.eval(*spec.maximizer_hint);
    if (v >= best) {
      best = v;
      arg = *spec.maximizer_hint;
    }
  }
  spec.f_max = best;
  spec.maximizer_hint = arg;
  spec.f_max_approximate = true;
}

double default_bound(double lip, const std::optional<double>& given) {
  if (given) {
    if (*given < lip) {
      throw std::invalid_argument("objective: declared Lipschitz bound below Lip(f)");
    }
    return *given;
  }
  return lip > 0.0 ? lip : 1.0;
}

}  // namespace

ObjectiveSpec make_builtin(const std::string& name, const BuiltinParams& params,
                           const SearchDomain& domain) {
  const Norm abs_norm = params.abs_norm.value_or(domain.norm());
  const double equiv = norm_equivalence(abs_norm, domain.norm(), domain.dim());
  const Point nearest = clamp_origin(domain.box());
  const double min_abs = norm_of(nearest, abs_norm);
  const double max_abs = farthest_corner_norm(domain.box(), abs_norm);

  ObjectiveSpec spec{.name = name, .eval = {}, .domain = domain};
  spec.maximizer_hint = nearest;

  if (name == "constant") {
    const double c0 = params.constant;
    spec.eval = [c0](std::span<const double>) { return c0; };
    spec.lip_true = 0.0;
    spec.f_max = c0;
  } else if (name == "cone") {
    spec.eval = [abs_norm](std::span<const double> x) { return 1.0 - norm_of(x, abs_norm); };
    spec.lip_true = equiv;
    spec.f_max = 1.0 - min_abs;
  } else if (name == "power") {
    const double p = params.power_exponent;
    if (!(p > 1.0)) throw std::invalid_argument("power objective: exponent must be > 1");
    spec.eval = [abs_norm, p](std::span<const double> x) {
      return 1.0 - std::pow(norm_of(x, abs_norm), p);
    };
    spec.lip_true = p * std::pow(max_abs, p - 1.0) * equiv;
    spec.f_max = 1.0 - std::pow(min_abs, p);
  } else if (name == "plateau-cone") {
    const double rho = params.plateau_radius;
    if (!(rho >= 0.0)) throw std::invalid_argument("plateau-cone objective: radius must be >= 0");
    spec.eval = [abs_norm, rho](std::span<const double> x) {
      return 1.0 - std::max(norm_of(x, abs_norm) - rho, 0.0);
    };
    spec.lip_true = max_abs > rho ? equiv : 0.0;
    spec.f_max = 1.0 - std::max(min_abs - rho, 0.0);
  } else {
    throw std::invalid_argument("unknown builtin objective '" + name + "'");
  }
  spec.L_declared = default_bound(spec.lip_true, params.lipschitz_bound);
  if (domain.has_membership() && !domain.contains(nearest)) {
    // The clamped maximizer was carved out; fall back to a grid estimate.
    double side = 0.0;
    for (std::size_t j = 0; j < domain.dim(); ++j) {
      side = std::max(side, domain.box().hi[j] - domain.box().lo[j]);
    }
    estimate_max_on_grid(spec, side / 256.0);
  }
  return spec;
}

namespace {

struct Table {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;  // row-major, last axis fastest
  std::vector<std::size_t> strides;

  double at(const std::vector<std::size_t>& idx) const {
    std::size_t off = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) off += idx[j] * strides[j];
    return values[off];
  }

  double interpolate(std::span<const double> x) const {
    const std::size_t d = axes.size();
    std::vector<std::size_t> base(d);
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& a = axes[j];
      const double xj = std::clamp(x[j], a.front(), a.back());
      if (a.size() == 1) {
        base[j] = 0;
        w[j] = 0.0;
        continue;
      }
      auto it = std::upper_bound(a.begin(), a.end(), xj);
      std::size_t k = it == a.begin() ? 0 : static_cast<std::size_t>(it - a.begin()) - 1;
      k = std::min(k, a.size() - 2);
      base[j] = k;
      w[j] = (xj - a[k]) / (a[k + 1] - a[k]);
    }
    double acc = 0.0;
    std::vector<std::size_t> idx(d);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      double weight = 1.0;
      bool skip = false;
      for (std::size_t j = 0; j < d; ++j) {
        const bool up = (mask >> j) & 1U;
        if (up && axes[j].size() == 1) {
          skip = true;
          break;
        }
        idx[j] = base[j] + (up ? 1 : 0);
        weight *= up ? w[j] : 1.0 - w[j];
      }
      if (!skip && weight != 0.0) acc += weight * at(idx);
    }
    return acc;
  }
};

Norm dual_of(Norm norm) {
  switch (norm) {
    case Norm::sup:
      return Norm::l1;
    case Norm::l1:
      return Norm::sup;
    case Norm::l2:
      return Norm::l2;
  }
  return Norm::l2;
}

}  // namespace

ObjectiveSpec load_tabulated(std::istream& csv, Norm norm, std::optional<double> lipschitz_bound) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw std::invalid_argument("tabulated objective: non-numeric row '" + line + "'");
    }
    if (width == 0) width = row.size();
    if (row.size() != width || width < 2) {
      throw std::invalid_argument("tabulated objective: inconsistent row width");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("tabulated objective: no data rows");
  const std::size_t d = width - 1;

  auto table = std::make_shared<Table>();
  table->axes.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto& a = table->axes[j];
    for (const auto& r : rows) a.push_back(r[j]);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::size_t total = 1;
  table->strides.assign(d, 1);
  for (std::size_t j = d; j-- > 0;) {
    table->strides[j] = total;
    total *= table->axes[j].size();
  }
  if (total != rows.size()) {
    throw std::invalid_argument("tabulated objective: rows do not form a full regular grid");
  }
  table->values.assign(total, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    std::size_t off = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& a = table->axes[j];
      off += static_cast<std::size_t>(std::lower_bound(a.begin(), a.end(), r[j]) - a.begin()) *
             table->strides[j];
    }
    if (!std::isnan(table->values[off])) {
      throw std::invalid_argument("tabulated objective: duplicate grid point");
    }
    table->values[off] = r[d];
  }

  // Within a cell the gradient of the interpolant is affine in each
  // coordinate separately, so its dual norm peaks at a vertex, where each
  // partial derivative is the edge slope leaving that vertex inside the cell.
  double lip = 0.0;
  const Norm dual = dual_of(norm);
  std::vector<std::size_t> cell(d, 0), idx(d);
  std::vector<std::size_t> cells_per_axis(d);
  std::size_t n_cells = 1;
  for (std::size_t j = 0; j < d; ++j) {
    cells_per_axis[j] = std::max<std::size_t>(table->axes[j].size(), 2) - 1;
    n_cells *= cells_per_axis[j];
  }
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rest = c;
    for (std::size_t j = d; j-- > 0;) {
      cell[j] = rest % cells_per_axis[j];
      rest /= cells_per_axis[j];
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      bool skip = false;
      for (std::size_t j = 0; j < d; ++j) {
        const bool up = (mask >> j) & 1U;
        if (up && table->axes[j].size() == 1) skip = true;
        idx[j] = cell[j] + (up ? 1 : 0);
      }
      if (skip) continue;
      Point grad(d, 0.0);
      for (std::size_t j = 0; j < d; ++j) {
        if (table->axes[j].size() == 1) continue;
        auto other = idx;
        other[j] = idx[j] == cell[j] ? cell[j] + 1 : cell[j];
        const double dx = table->axes[j][other[j]] - table->axes[j][idx[j]];
        grad[j] = (table->at(other) - table->at(idx)) / dx;
      }
      lip = std::max(lip, norm_of(grad, dual));
    }
  }

  Box box{Point(d), Point(d)};
  for (std::size_t j = 0; j < d; ++j) {
    box.lo[j] = table->axes[j].front();
    box.hi[j] = table->axes[j].back();
  }
  ObjectiveSpec spec{.name = "tabulated", .eval = {}, .domain = SearchDomain(box, norm)};
  spec.eval = [table](std::span<const double> x) { return table->interpolate(x); };
  spec.lip_true = lip;
  spec.L_declared = default_bound(lip, lipschitz_bound);
  const auto best = std::max_element(table->values.begin(), table->values.end());
  spec.f_max = *best;
  std::size_t rest = static_cast<std::size_t>(best - table->values.begin());
  Point arg(d);
  for (std::size_t j = 0; j < d; ++j) {
    arg[j] = table->axes[j][rest / table->strides[j]];
    rest %= table->strides[j];
  }
  spec.maximizer_hint = arg;
  return spec;
}

ObjectiveSpec make_user_objective(std::string name, std::function<double(std::span<const double>)> f,
                                  SearchDomain domain, double lip_true, double L_declared,
                                  double grid_step) {
  if (L_declared < lip_true) {
    throw std::invalid_argument("objective: declared Lipschitz bound below Lip(f)");
  }
  ObjectiveSpec spec{.name = std::move(name), .eval = std::move(f), .domain = std::move(domain)};
  spec.lip_true = lip_true;
  spec.L_declared = L_declared;
  estimate_max_on_grid(spec, grid_step);
  return spec;
}

LipschitzCheck check_lipschitz(const ObjectiveSpec& spec, std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs == 0) throw std::invalid_argument("check_lipschitz: n_pairs must be >= 1");
  const SearchDomain& dom = spec.domain;
  const std::size_t d = dom.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Point& p) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (std::size_t j = 0; j < d; ++j) {
        p[j] = dom.box().lo[j] + unif(rng) * (dom.box().hi[j] - dom.box().lo[j]);
      }
      if (dom.contains(p)) return true;
    }
    return false;
  };

  LipschitzCheck out;
  Point u(d), v(d);
  for (std::size_t n = 0; n < n_pairs; ++n) {
    if (!draw(u)) continue;
    if (n % 2 == 0) {
      if (!draw(v)) continue;
    } else {
      // Close pair: local slopes dominate the Lipschitz constant.
      const double scale = dom.diameter() * std::pow(10.0, -1.0 - 4.0 * unif(rng));
      for (std::size_t j = 0; j < d; ++j) {
        v[j] = std::clamp(u[j] + scale * (2.0 * unif(rng) - 1.0), dom.box().lo[j], dom.box().hi[j]);
      }
      if (!dom.contains(v)) continue;
    }
    const double dist = dom.distance(u, v);
    if (dist <= 0.0) continue;
    out.max_ratio = std::max(out.max_ratio, std::abs(spec.eval(u) - spec.eval(v)) / dist);
  }
  out.pass = out.max_ratio <= spec.L_declared + 1e-9;
  return out;
}

double suboptimality_gap(const ObjectiveSpec& spec, std::span<const double> x) {
  const double gap = spec.f_max - spec.eval(x);
  return spec.f_max_approximate ? std::max(gap, 0.0) : gap;
}

}  // namespace certmf
