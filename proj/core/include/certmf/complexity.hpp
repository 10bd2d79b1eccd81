#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "certmf/cmfdoo.hpp"
#include "certmf/cost.hpp"
#include "certmf/geometry.hpp"
#include "certmf/objectives.hpp"

namespace certmf {

/// eps0 = L diam(X), m = ceil(log2(eps0/eps)); values[k-1] = eps_k with
/// eps_k = eps0 2^-k for k < m and eps_m = eps.
struct EpsSchedule {
  double eps0 = 0.0;
  int m = 0;
  std::vector<double> values;

  double eps() const { return values.back(); }
  /// eps_k for k in [0, m]; eps_0 = eps0.
  double at(int k) const { return k == 0 ? eps0 : values.at(static_cast<std::size_t>(k - 1)); }
};

EpsSchedule eps_schedule(double L, double diam, double eps);

/// Grid points of the domain (step <= grid_resolution on every axis) with
/// their suboptimality gaps f_max - f(x), stored flat.
struct GapGrid {
  std::size_t dim = 0;
  double step = 0.0;
  std::vector<double> coords;
  std::vector<double> gaps;

  std::size_t size() const { return gaps.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

GapGrid make_gap_grid(const ObjectiveSpec& objective, double grid_resolution);

/// Packing number at separation r of the grid points whose gap lies in (a, b].
std::size_t layer_packing(const GapGrid& grid, Norm norm, double a, double b, double r);
std::size_t layer_packing(const ObjectiveSpec& objective, double L, double a, double b, double r,
                          double grid_resolution);

struct LayerTerm {
  int k = 0;
  double eps_k = 0.0;
  std::size_t packing = 0;
  double cost = 0.0;  // c(beta eps_k)
  double term = 0.0;  // packing * cost
};

struct SValue {
  double beta = 0.0;
  double S = 0.0;
  double base_term = 0.0;
  std::vector<LayerTerm> layers;
};

struct ComplexityProfile {
  EpsSchedule schedule;
  double L = 0.0;
  std::size_t base_packing = 0;              // N(X_eps, eps/L)
  std::vector<std::size_t> layer_packings;   // [k-1]: N(X_(eps_k, eps_{k-1}], eps_k/L)
  double grid_resolution = 0.0;              // actual grid step used
  bool packings_exact = true;                // every candidate set was small enough for brute force
  std::vector<SValue> s_values;
};

/// Packings of X_eps and of every layer; independent of beta and of the cost.
ComplexityProfile complexity_profile(const ObjectiveSpec& objective, double L, double eps,
                                     double grid_resolution);

/// S_{beta,L}(f, eps) from precomputed packings.
SValue evaluate_s(const ComplexityProfile& profile, double beta, const CostFunction& cost);

struct SBetaResult {
  double S = 0.0;
  ComplexityProfile profile;  // with the evaluated SValue appended
};

SBetaResult s_beta(const ObjectiveSpec& objective, double L, double eps, double beta,
                   const CostFunction& cost, double grid_resolution);

/// a = K if nu >= 3R, else K (1 + 6R/nu)^d.
double upper_bound_constant(std::uint64_t arity, double nu, double radius, std::size_t dim);

/// a S_{delta/3,L}(f, eps) + c(LR); S is evaluated from the profile at beta = delta/3.
double upper_bound_prediction(const ComplexityProfile& profile, const CostFunction& cost,
                              const PartitionConstants& constants, double L, std::size_t dim);

struct LowerBoundPrediction {
  double value = 0.0;
  std::string warning;  // nonempty when L <= Lip(f)
};

/// (1/65^d) (1 - Lip/L)^d / (1 + m_eps) S_{16,L}(f, eps).
LowerBoundPrediction lower_bound_prediction(const ComplexityProfile& profile, double lip,
                                            const CostFunction& cost, std::size_t dim);
LowerBoundPrediction lower_bound_prediction(const ObjectiveSpec& objective, double L, double eps,
                                            const CostFunction& cost, std::size_t dim,
                                            double grid_resolution);

/// Upper envelope U(x) = min_t (y_t + alpha_t + L|x - x_t|) on a grid and lower
/// envelope Llow(z) = max_t (y_t - alpha_t - L|z - x_t|), grown one
/// observation at a time. The extremal consistent function for a
/// recommendation z is g(x) = min(U(x), Llow(z) + L|x - z|), so the best
/// possible certificate is max_x min(U(x) - Llow(z), L|x - z|).
class EnvelopeTracker {
 public:
  EnvelopeTracker(const SearchDomain& domain, double L, double grid_resolution);

  void add(std::span<const double> x, double alpha, double y);

  double upper_max() const { return upper_max_; }
  double lower_at(std::span<const double> z) const;
  double upper_at(std::span<const double> z) const;
  /// max over the grid of min(U(x) - Llow(rec), L|x - rec|).
  double err(std::span<const double> rec) const;

  double grid_step() const { return step_; }
  std::size_t count() const { return ys_.size(); }
  /// 1-based indices t with U(x_t) < y_t - alpha_t.
  const std::vector<std::size_t>& inconsistent() const { return inconsistent_; }

 private:
  SearchDomain domain_;
  double L_;
  double step_;
  std::size_t dim_;
  std::vector<double> grid_;
  std::vector<double> upper_;
  double upper_max_;
  std::vector<double> xs_;
  std::vector<double> alphas_;
  std::vector<double> ys_;
  std::vector<double> upper_at_obs_;
  std::vector<char> flagged_;
  std::vector<std::size_t> inconsistent_;
};

struct ErrTau {
  double value = 0.0;
  double upper_max = 0.0;  // max_grid U
  double lower_at_rec = 0.0;
  double grid_step = 0.0;
  std::vector<std::size_t> inconsistent;
};

/// err_tau from trace rows 1..tau and the recommendation x*_tau.
ErrTau err_tau_oracle(std::span<const TraceRow> rows, std::span<const double> rec, double L,
                      const SearchDomain& domain, double grid_resolution);

/// Midpoint quadrature of int_X c(b (gap(x) + eps)) / (gap(x) + eps)^d dx.
double integral_approximation(const ObjectiveSpec& objective, double eps, const CostFunction& cost,
                              double b, double grid_resolution);

}  // namespace certmf
