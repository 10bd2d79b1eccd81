#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace certmf {

using Point = std::vector<double>;

enum class Norm { sup, l1, l2 };

Norm parse_norm(std::string_view name);
std::string_view to_string(Norm norm);

double norm_of(std::span<const double> v, Norm norm);
double distance(std::span<const double> a, std::span<const double> b, Norm norm);

/// Axis-aligned box [lo_j, hi_j] per coordinate.
struct Box {
  Point lo;
  Point hi;

  std::size_t dim() const { return lo.size(); }
  Point center() const;
  bool contains(std::span<const double> x) const;
};

/// Interior scan points of a box: n points per axis at offsets (k + 1/2)/n,
/// enumerated in row-major order (last axis fastest). For odd n the center
/// is included.
std::vector<Point> scan_points(const Box& box, int per_axis);

/// Regular grid including both endpoints on each axis, with spacing at most
/// `step`. Row-major, so the enumeration order is lexicographic.
std::vector<Point> grid_points(const Box& box, double step);

/// A compact search domain: a bounding box, an optional membership predicate
/// that carves a subset out of it, and a norm.
class SearchDomain {
 public:
  using Membership = std::function<bool(std::span<const double>)>;

  SearchDomain(Box box, Norm norm, Membership membership = {});

  static SearchDomain unit_cube(std::size_t dim, Norm norm = Norm::sup);

  std::size_t dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  Norm norm() const { return norm_; }
  double diameter() const { return diameter_; }
  bool has_membership() const { return static_cast<bool>(membership_); }

  bool contains(std::span<const double> x) const;
  double distance(std::span<const double> a, std::span<const double> b) const {
    return certmf::distance(a, b, norm_);
  }

 private:
  Box box_;
  Norm norm_;
  Membership membership_;
  double diameter_ = 0.0;
};

struct NodeId {
  int depth = 0;
  std::uint64_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Returns (h+1, K*i) ... (h+1, K*(i+1)-1).
std::vector<NodeId> children(NodeId node, std::uint64_t arity);

struct PartitionConstants {
  std::uint64_t arity = 2;
  double delta = 0.5;
  double radius = 1.0;  // R
  double nu = 0.5;
};

/// K-ary hierarchical partition obtained by splitting every axis of the
/// bounding box into `splits_per_axis` equal parts at each level, so that
/// K = splits_per_axis^d. Child digits are row-major over axes (axis 0 most
/// significant), which makes cell addressing closed-form.
class HierarchicalPartition {
 public:
  HierarchicalPartition(SearchDomain domain, PartitionConstants constants,
                        int scan_per_axis = 3);

  /// [0,1]^d (or the given box) under the sup norm with K = 2^d, delta = nu = 1/2
  /// and R = the largest side; the "dyadic-sup" preset.
  static HierarchicalPartition dyadic(SearchDomain domain, int scan_per_axis = 3);

  /// R and nu valid for the dyadic split of `domain` under its norm.
  static PartitionConstants dyadic_constants(const SearchDomain& domain);

  const SearchDomain& domain() const { return domain_; }
  std::uint64_t arity() const { return constants_.arity; }
  double delta() const { return constants_.delta; }
  double radius() const { return constants_.radius; }
  double nu() const { return constants_.nu; }
  const PartitionConstants& constants() const { return constants_; }
  int splits_per_axis() const { return splits_; }
  int scan_per_axis() const { return scan_per_axis_; }

  /// Deepest level whose indices fit in 64 bits.
  int max_addressable_depth() const { return max_depth_; }

  bool valid(NodeId node) const;
  Box cell_of(NodeId node) const;

  /// Cell center when it lies in the domain, otherwise the first feasible
  /// scan point of the cell; nullopt when no scanned point is feasible.
  std::optional<Point> representative(NodeId node) const;

 private:
  SearchDomain domain_;
  PartitionConstants constants_;
  int splits_ = 2;
  int scan_per_axis_ = 3;
  int max_depth_ = 0;
};

/// Largest number of pairwise r-separated points (distance > r) among the
/// candidates. Exact (branch and bound) for at most kExactPackingLimit
/// candidates; beyond that a greedy maximal packing in candidate order,
/// which is a lower bound on the true value.
inline constexpr std::size_t kExactPackingLimit = 20;

std::size_t packing_number(std::span<const Point> candidates, double r, Norm norm);
std::size_t exact_packing_number(std::span<const Point> candidates, double r, Norm norm);
std::size_t greedy_packing_number(std::span<const Point> candidates, double r, Norm norm);

/// Same as packing_number for n points stored contiguously (n * dim doubles).
std::size_t packing_number_flat(std::span<const double> coords, std::size_t dim, double r,
                                Norm norm);

/// Packing number of a region given by a box and membership, discretized on a
/// grid of spacing `resolution`.
std::size_t packing_number(const SearchDomain& region, double r, double resolution);

struct AssumptionReport {
  double radius_observed = 0.0;  // max ||u - v|| / delta^h over sampled pairs
  double nu_observed = 0.0;      // min ||x_a - x_b|| / delta^max(h_a, h_b)
  bool radius_ok = true;
  bool nu_ok = true;
  std::string witness;  // first violating pair, empty when both hold

  bool pass() const { return radius_ok && nu_ok; }
};

/// Empirical check of the cell-diameter bound (R, delta) and of the
/// representative separation bound (nu, delta) on every node up to max_depth.
AssumptionReport verify_assumptions(const HierarchicalPartition& partition, int max_depth,
                                    int samples_per_cell, std::uint64_t seed = 0);

/// Searches unit directions (in the domain norm) for v with x + eps * v in the
/// domain; nullopt if none of the probed directions works.
std::optional<Point> find_feasible_direction(const SearchDomain& domain,
                                             std::span<const double> x, double eps,
                                             int directions_per_axis = 16);

}  // namespace certmf
