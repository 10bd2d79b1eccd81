#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "certmf/geometry.hpp"

namespace certmf {

/// A Lipschitz objective on a search domain together with what is known
/// about it: its best Lipschitz constant, the bound L handed to algorithms,
/// and its maximum value.
struct ObjectiveSpec {
  std::string name;
  std::function<double(std::span<const double>)> eval;
  SearchDomain domain;
  double lip_true = 0.0;
  double L_declared = 0.0;
  double f_max = 0.0;
  std::optional<Point> maximizer_hint{};
  bool f_max_approximate = false;

  double operator()(std::span<const double> x) const { return eval(x); }
};

struct BuiltinParams {
  double constant = 0.0;                // constant: the value c0
  std::optional<Norm> abs_norm;         // |.| in cone/power/plateau-cone; domain norm if unset
  double power_exponent = 2.0;          // power: exponent > 1
  double plateau_radius = 0.25;         // plateau-cone: rho
  std::optional<double> lipschitz_bound;  // L_declared; defaults to lip_true (1 if lip_true = 0)
};

/// Builtin suite: "constant" (c0), "cone" (1 - |x|), "power" (1 - |x|^p, p > 1)
/// and "plateau-cone" (1 - max(|x| - rho, 0)). Lip(f), f_max and the
/// maximizer are exact for box domains.
ObjectiveSpec make_builtin(const std::string& name, const BuiltinParams& params,
                           const SearchDomain& domain);

/// Smallest C with |u| <= C ||u|| for all u in R^d.
double norm_equivalence(Norm abs_norm, Norm domain_norm, std::size_t dim);

/// Objective defined by values on a regular grid (CSV rows: x_1..x_d, value),
/// multilinearly interpolated. Lip(f) is the exact constant of the
/// interpolant under `norm`; f_max is the largest table value.
ObjectiveSpec load_tabulated(std::istream& csv, Norm norm, std::optional<double> lipschitz_bound = {});

/// Wraps an arbitrary function. f_max is estimated on a grid of spacing
/// `grid_step` and flagged approximate.
ObjectiveSpec make_user_objective(std::string name, std::function<double(std::span<const double>)> f,
                                  SearchDomain domain, double lip_true, double L_declared,
                                  double grid_step);

struct LipschitzCheck {
  double max_ratio = 0.0;
  bool pass = true;
};

/// Largest observed |f(u) - f(v)| / ||u - v|| over random pairs (half of them
/// close pairs); passes iff it stays below L_declared + 1e-9.
LipschitzCheck check_lipschitz(const ObjectiveSpec& spec, std::size_t n_pairs, std::uint64_t seed);

/// f_max - f(x); clamped at zero when f_max is only a grid estimate.
double suboptimality_gap(const ObjectiveSpec& spec, std::span<const double> x);

}  // namespace certmf
