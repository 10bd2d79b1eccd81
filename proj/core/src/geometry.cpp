#include "certmf/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace certmf {

Norm parse_norm(std::string_view name) {
  if (name == "sup" || name == "linf" || name == "max") return Norm::sup;
  if (name == "l1") return Norm::l1;
  if (name == "l2") return Norm::l2;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

std::string_view to_string(Norm norm) {
  switch (norm) {
    case Norm::sup:
      return "sup";
    case Norm::l1:
      return "l1";
    case Norm::l2:
      return "l2";
  }
  return "?";
}

double norm_of(std::span<const double> v, Norm norm) {
  double acc = 0.0;
  switch (norm) {
    case Norm::sup:
      for (double c : v) acc = std::max(acc, std::abs(c));
      return acc;
    case Norm::l1:
      for (double c : v) acc += std::abs(c);
      return acc;
    case Norm::l2:
      for (double c : v) acc += c * c;
      return std::sqrt(acc);
  }
  return acc;
}

double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double c = std::abs(a[j] - b[j]);
    switch (norm) {
      case Norm::sup:
        acc = std::max(acc, c);
        break;
      case Norm::l1:
        acc += c;
        break;
      case Norm::l2:
        acc += c * c;
        break;
    }
  }
  return norm == Norm::l2 ? std::sqrt(acc) : acc;
}

Point Box::center() const {
  Point c(dim());
  for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lo[j] + hi[j]);
  return c;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  }
  return true;
}

namespace {

// Enumerates the cartesian product of per-axis coordinate lists, row-major.
std::vector<Point> cartesian(const std::vector<std::vector<double>>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<Point> out;
  out.reserve(total);
  const std::size_t d = axes.size();
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Point p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = axes[j][idx[j]];
    out.push_back(std::move(p));
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < axes[j].size()) break;
      idx[j] = 0;
    }
  }
  return out;
}

}  // namespace

std::vector<Point> scan_points(const Box& box, int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("scan_points: per_axis must be >= 1");
  std::vector<std::vector<double>> axes(box.dim());
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const double w = box.hi[j] - box.lo[j];
    for (int k = 0; k < per_axis; ++k) {
      axes[j].push_back(box.lo[j] + w * (k + 0.5) / per_axis);
    }
  }
  return cartesian(axes);
}

std::vector<Point> grid_points(const Box& box, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid_points: step must be > 0");
  std::vector<std::vector<double>> axes(box.dim());
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const double w = box.hi[j] - box.lo[j];
    const auto n = static_cast<long>(std::ceil(w / step - 1e-9));
    if (n <= 0) {
      axes[j].push_back(box.lo[j]);
      continue;
    }
    for (long k = 0; k <= n; ++k) {
      axes[j].push_back(k == n ? box.hi[j] : box.lo[j] + w * static_cast<double>(k) / n);
    }
  }
  return cartesian(axes);
}

SearchDomain::SearchDomain(Box box, Norm norm, Membership membership)
    : box_(std::move(box)), norm_(norm), membership_(std::move(membership)) {
  if (box_.lo.empty() || box_.lo.size() != box_.hi.size()) {
    throw std::invalid_argument("SearchDomain: box must have matching nonzero dimension");
  }
  Point side(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(box_.lo[j] < box_.hi[j])) {
      throw std::invalid_argument("SearchDomain: empty box on axis " + std::to_string(j));
    }
    side[j] = box_.hi[j] - box_.lo[j];
  }
  diameter_ = norm_of(side, norm_);
  if (membership_) {
    bool any = false;
    for (const auto& p : grid_points(box_, norm_of(side, Norm::sup) / 32.0)) {
      if (membership_(p)) {
        any = true;
        break;
      }
    }
    if (!any) throw std::invalid_argument("SearchDomain: membership is empty on the scan grid");
  }
}

SearchDomain SearchDomain::unit_cube(std::size_t dim, Norm norm) {
  return SearchDomain(Box{Point(dim, 0.0), Point(dim, 1.0)}, norm);
}

bool SearchDomain::contains(std::span<const double> x) const {
  if (!box_.contains(x)) return false;
  return !membership_ || membership_(x);
}

std::vector<NodeId> children(NodeId node, std::uint64_t arity) {
  std::vector<NodeId> out;
  out.reserve(arity);
  for (std::uint64_t j = 0; j < arity; ++j) {
    out.push_back(NodeId{node.depth + 1, node.index * arity + j});
  }
  return out;
}

HierarchicalPartition::HierarchicalPartition(SearchDomain domain, PartitionConstants constants,
                                             int scan_per_axis)
    : domain_(std::move(domain)), constants_(constants), scan_per_axis_(scan_per_axis) {
  if (!(constants_.delta > 0.0 && constants_.delta < 1.0)) {
    throw std::invalid_argument("partition: delta must lie in (0,1)");
  }
  if (!(constants_.radius > 0.0)) throw std::invalid_argument("partition: R must be > 0");
  if (!(constants_.nu > 0.0)) throw std::invalid_argument("partition: nu must be > 0");
  if (scan_per_axis_ < 1) throw std::invalid_argument("partition: scan_per_axis must be >= 1");
  // K must be s^d for an integer s >= 2.
  const auto d = static_cast<double>(domain_.dim());
  const auto s = static_cast<int>(std::llround(std::pow(static_cast<double>(constants_.arity), 1.0 / d)));
  std::uint64_t check = 1;
  for (std::size_t j = 0; j < domain_.dim(); ++j) check *= static_cast<std::uint64_t>(std::max(s, 1));
  if (s < 2 || check != constants_.arity) {
    throw std::invalid_argument("partition: K must equal s^d for an integer s >= 2 (got K=" +
                                std::to_string(constants_.arity) + ")");
  }
  splits_ = s;
  // Largest h with K^h < 2^63.
  max_depth_ = 0;
  long double cap = 1.0L;
  while (cap * static_cast<long double>(constants_.arity) < 9.2e18L) {
    cap *= static_cast<long double>(constants_.arity);
    ++max_depth_;
  }
}

PartitionConstants HierarchicalPartition::dyadic_constants(const SearchDomain& domain) {
  const std::size_t d = domain.dim();
  Point side(d);
  double min_side = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d; ++j) {
    side[j] = domain.box().hi[j] - domain.box().lo[j];
    min_side = std::min(min_side, side[j]);
  }
  PartitionConstants c;
  c.arity = std::uint64_t{1} << d;
  c.delta = 0.5;
  c.radius = norm_of(side, domain.norm());
  // Distinct centers differ on some axis by at least side_j / 2^(h+1), and
  // every norm in the menu dominates the sup norm.
  c.nu = 0.5 * min_side;
  return c;
}

HierarchicalPartition HierarchicalPartition::dyadic(SearchDomain domain, int scan_per_axis) {
  auto c = dyadic_constants(domain);
  return HierarchicalPartition(std::move(domain), c, scan_per_axis);
}

bool HierarchicalPartition::valid(NodeId node) const {
  if (node.depth < 0 || node.depth > max_depth_) return false;
  std::uint64_t count = 1;
  for (int h = 0; h < node.depth; ++h) count *= constants_.arity;
  return node.index < count;
}

Box HierarchicalPartition::cell_of(NodeId node) const {
  if (!valid(node)) {
    throw std::out_of_range("cell_of: node (" + std::to_string(node.depth) + "," +
                            std::to_string(node.index) + ") out of range");
  }
  const std::size_t d = domain_.dim();
  const auto s = static_cast<std::uint64_t>(splits_);
  // Per-axis integer coordinates at resolution s^depth, built from the base-K
  // digits of the index (most significant digit = level 1).
  std::vector<std::uint64_t> coord(d, 0);
  std::vector<std::uint64_t> digits(static_cast<std::size_t>(node.depth));
  std::uint64_t rest = node.index;
  for (int h = node.depth; h-- > 0;) {
    digits[static_cast<std::size_t>(h)] = rest % constants_.arity;
    rest /= constants_.arity;
  }
  for (std::uint64_t digit : digits) {
    std::vector<std::uint64_t> sub(d);
    for (std::size_t j = d; j-- > 0;) {
      sub[j] = digit % s;
      digit /= s;
    }
    for (std::size_t j = 0; j < d; ++j) coord[j] = coord[j] * s + sub[j];
  }
  const long double cells = std::pow(static_cast<long double>(s), node.depth);
  Box out{Point(d), Point(d)};
  const Box& root = domain_.box();
  for (std::size_t j = 0; j < d; ++j) {
    const long double w = static_cast<long double>(root.hi[j]) - root.lo[j];
    out.lo[j] = static_cast<double>(root.lo[j] + w * static_cast<long double>(coord[j]) / cells);
    out.hi[j] = coord[j] + 1 == static_cast<std::uint64_t>(cells)
                    ? root.hi[j]
                    : static_cast<double>(root.lo[j] + w * static_cast<long double>(coord[j] + 1) / cells);
  }
  return out;
}

std::optional<Point> HierarchicalPartition::representative(NodeId node) const {
  const Box cell = cell_of(node);
  Point c = cell.center();
  if (domain_.contains(c)) return c;
  for (auto& p : scan_points(cell, scan_per_axis_)) {
    if (domain_.contains(p)) return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Packing numbers

namespace {

struct ConflictGraph {
  std::vector<std::uint32_t> adj;  // bit j set in adj[i] iff ||p_i - p_j|| <= r
};

std::size_t max_independent(const ConflictGraph& g, std::uint32_t remaining, std::size_t current,
                            std::size_t best) {
  if (remaining == 0) return std::max(best, current);
  if (current + static_cast<std::size_t>(std::popcount(remaining)) <= best) return best;
  const int v = std::countr_zero(remaining);
  const std::uint32_t bit = std::uint32_t{1} << v;
  // Take v: drop it and its neighbours.
  best = max_independent(g, remaining & ~bit & ~g.adj[static_cast<std::size_t>(v)], current + 1,
                         best);
  // Skip v.
  best = max_independent(g, remaining & ~bit, current, best);
  return best;
}

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace

std::size_t exact_packing_number(std::span<const Point> candidates, double r, Norm norm) {
  if (!(r > 0.0)) throw std::invalid_argument("packing_number: r must be > 0");
  const std::size_t n = candidates.size();
  if (n == 0) return 0;
  if (n > 32) throw std::invalid_argument("exact_packing_number: too many candidates");
  ConflictGraph g;
  g.adj.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(candidates[i], candidates[j], norm) <= r) {
        g.adj[i] |= std::uint32_t{1} << j;
        g.adj[j] |= std::uint32_t{1} << i;
      }
    }
  }
  const std::uint32_t all = n == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1;
  return max_independent(g, all, 0, 0);
}

namespace {

std::size_t greedy_flat(std::span<const double> coords, std::size_t d, double r, Norm norm) {
  if (!(r > 0.0)) throw std::invalid_argument("packing_number: r must be > 0");
  const std::size_t n = d == 0 ? 0 : coords.size() / d;
  if (n == 0) return 0;
  // Any norm in the menu dominates the sup norm, so points within distance r
  // sit in neighbouring hash cells of side r.
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, VecHash> buckets;
  std::size_t chosen = 0;
  std::vector<std::int64_t> key(d), probe(d);
  std::vector<int> offset(d);
  for (std::size_t c = 0; c < n; ++c) {
    const auto p = coords.subspan(c * d, d);
    for (std::size_t j = 0; j < d; ++j) key[j] = static_cast<std::int64_t>(std::floor(p[j] / r));
    bool ok = true;
    std::fill(offset.begin(), offset.end(), -1);
    while (ok) {
      for (std::size_t j = 0; j < d; ++j) probe[j] = key[j] + offset[j];
      if (auto it = buckets.find(probe); it != buckets.end()) {
        for (std::size_t q : it->second) {
          if (distance(p, coords.subspan(q * d, d), norm) <= r) {
            ok = false;
            break;
          }
        }
      }
      std::size_t j = 0;
      for (; j < d; ++j) {
        if (++offset[j] <= 1) break;
        offset[j] = -1;
      }
      if (j == d) break;
    }
    if (ok) {
      buckets[key].push_back(c);
      ++chosen;
    }
  }
  return chosen;
}

}  // namespace

std::size_t greedy_packing_number(std::span<const Point> candidates, double r, Norm norm) {
  if (candidates.empty()) {
    if (!(r > 0.0)) throw std::invalid_argument("packing_number: r must be > 0");
    return 0;
  }
  const std::size_t d = candidates.front().size();
  std::vector<double> flat;
  flat.reserve(candidates.size() * d);
  for (const auto& p : candidates) flat.insert(flat.end(), p.begin(), p.end());
  return greedy_flat(flat, d, r, norm);
}

std::size_t packing_number_flat(std::span<const double> coords, std::size_t dim, double r,
                                Norm norm) {
  const std::size_t n = dim == 0 ? 0 : coords.size() / dim;
  if (n > kExactPackingLimit) return greedy_flat(coords, dim, r, norm);
  std::vector<Point> pts;
  for (std::size_t c = 0; c < n; ++c) {
    pts.emplace_back(coords.begin() + static_cast<std::ptrdiff_t>(c * dim),
                     coords.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
  }
  return exact_packing_number(pts, r, norm);
}

std::size_t packing_number(std::span<const Point> candidates, double r, Norm norm) {
  if (candidates.size() <= kExactPackingLimit) return exact_packing_number(candidates, r, norm);
  return greedy_packing_number(candidates, r, norm);
}

std::size_t packing_number(const SearchDomain& region, double r, double resolution) {
  std::vector<Point> pts;
  for (auto& p : grid_points(region.box(), resolution)) {
    if (region.contains(p)) pts.push_back(std::move(p));
  }
  return packing_number(pts, r, region.norm());
}

// ---------------------------------------------------------------------------

AssumptionReport verify_assumptions(const HierarchicalPartition& partition, int max_depth,
                                    int samples_per_cell, std::uint64_t seed) {
  if (max_depth < 1) throw std::invalid_argument("verify_assumptions: max_depth must be >= 1");
  if (max_depth > partition.max_addressable_depth()) {
    throw std::invalid_argument("verify_assumptions: max_depth exceeds addressable depth");
  }
  const auto K = partition.arity();
  std::uint64_t total = 0, level = 1;
  for (int h = 0; h <= max_depth; ++h) {
    total += level;
    level *= K;
  }
  constexpr std::uint64_t kNodeCap = 20000;
  if (total > kNodeCap) {
    throw std::invalid_argument("verify_assumptions: " + std::to_string(total) +
                                " nodes exceed the check limit; lower max_depth");
  }

  const SearchDomain& dom = partition.domain();
  const std::size_t d = dom.dim();
  const double tol = 1e-12;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  AssumptionReport rep;
  rep.nu_observed = std::numeric_limits<double>::infinity();

  struct Rep {
    NodeId node;
    Point x;
  };
  std::vector<Rep> reps;
  level = 1;
  for (int h = 0; h <= max_depth; ++h) {
    const double scale = std::pow(partition.delta(), h);
    for (std::uint64_t i = 0; i < level; ++i) {
      const NodeId node{h, i};
      const Box cell = partition.cell_of(node);
      std::vector<Point> pts;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        Point corner(d);
        for (std::size_t j = 0; j < d; ++j) corner[j] = (mask >> j) & 1U ? cell.hi[j] : cell.lo[j];
        pts.push_back(std::move(corner));
      }
      for (int s = 0; s < samples_per_cell; ++s) {
        Point u(d);
        for (std::size_t j = 0; j < d; ++j) u[j] = cell.lo[j] + unif(rng) * (cell.hi[j] - cell.lo[j]);
        pts.push_back(std::move(u));
      }
      for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
          const double ratio = dom.distance(pts[a], pts[b]) / scale;
          rep.radius_observed = std::max(rep.radius_observed, ratio);
          if (rep.radius_ok && ratio > partition.radius() * (1 + tol)) {
            rep.radius_ok = false;
            std::ostringstream os;
            os << "cell diameter: node (" << h << "," << i << ") has points at distance "
               << ratio * scale << " > R*delta^h = " << partition.radius() * scale;
            rep.witness = os.str();
          }
        }
      }
      if (auto x = partition.representative(node)) reps.push_back({node, std::move(*x)});
    }
    level *= K;
  }

  for (std::size_t a = 0; a < reps.size(); ++a) {
    for (std::size_t b = a + 1; b < reps.size(); ++b) {
      const int h = std::max(reps[a].node.depth, reps[b].node.depth);
      const double scale = std::pow(partition.delta(), h);
      const double ratio = dom.distance(reps[a].x, reps[b].x) / scale;
      rep.nu_observed = std::min(rep.nu_observed, ratio);
      if (rep.nu_ok && ratio < partition.nu() * (1 - tol)) {
        rep.nu_ok = false;
        if (rep.witness.empty()) {
          std::ostringstream os;
          os << "representative separation: nodes (" << reps[a].node.depth << ","
             << reps[a].node.index << ") and (" << reps[b].node.depth << "," << reps[b].node.index
             << ") are " << ratio * scale << " apart < nu*delta^h = " << partition.nu() * scale;
          rep.witness = os.str();
        }
      }
    }
  }
  return rep;
}

std::optional<Point> find_feasible_direction(const SearchDomain& domain,
                                             std::span<const double> x, double eps,
                                             int directions_per_axis) {
  const std::size_t d = domain.dim();
  std::vector<std::vector<double>> axes(d);
  for (std::size_t j = 0; j < d; ++j) {
    for (int k = 0; k <= directions_per_axis; ++k) {
      axes[j].push_back(-1.0 + 2.0 * k / directions_per_axis);
    }
  }
  for (auto& v : cartesian(axes)) {
    const double n = norm_of(v, domain.norm());
    if (n == 0.0) continue;
    Point y(d);
    for (std::size_t j = 0; j < d; ++j) {
      v[j] /= n;
      y[j] = x[j] + eps * v[j];
    }
    if (domain.contains(y)) return v;
  }
  return std::nullopt;
}

}  // namespace certmf
