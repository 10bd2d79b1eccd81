#pragma once

#include <functional>
#include <string>
#include <vector>

namespace certmf {

/// Non-increasing, nonnegative price c(alpha) of one evaluation at accuracy alpha.
class CostFunction {
 public:
  enum class Kind { constant, power_law, tabulated, custom };

  /// c(alpha) = c0.
  static CostFunction constant(double c0 = 1.0);
  /// c(alpha) = c0 * alpha^(-p), p >= 0.
  static CostFunction power_law(double c0, double p);
  /// Piecewise constant: cost[k] applies for alpha in [alpha[k], alpha[k+1]),
  /// cost[0] below alpha[0] as well. `alphas` strictly increasing, `costs`
  /// nonincreasing.
  static CostFunction tabulated(std::vector<double> alphas, std::vector<double> costs);
  static CostFunction custom(std::string description, std::function<double(double)> fn);

  double operator()(double alpha) const { return fn_(alpha); }
  Kind kind() const { return kind_; }
  const std::string& description() const { return description_; }

 private:
  CostFunction(Kind kind, std::string description, std::function<double(double)> fn)
      : kind_(kind), description_(std::move(description)), fn_(std::move(fn)) {}

  Kind kind_;
  std::string description_;
  std::function<double(double)> fn_;
};

}  // namespace certmf
