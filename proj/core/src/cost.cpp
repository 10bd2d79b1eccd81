#include "certmf/cost.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace certmf {

CostFunction CostFunction::constant(double c0) {
  if (!(c0 >= 0.0)) throw std::invalid_argument("cost: constant must be >= 0");
  std::ostringstream os;
  os << "constant(" << c0 << ")";
  return CostFunction(Kind::constant, os.str(), [c0](double) { return c0; });
}

CostFunction CostFunction::power_law(double c0, double p) {
  if (!(c0 >= 0.0)) throw std::invalid_argument("cost: c0 must be >= 0");
  if (!(p >= 0.0)) throw std::invalid_argument("cost: exponent must be >= 0");
  std::ostringstream os;
  os << c0 << "*alpha^-" << p;
  return CostFunction(Kind::power_law, os.str(), [c0, p](double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("cost: alpha must be > 0");
    return c0 * std::pow(alpha, -p);
  });
}

CostFunction CostFunction::tabulated(std::vector<double> alphas, std::vector<double> costs) {
  if (alphas.empty() || alphas.size() != costs.size()) {
    throw std::invalid_argument("cost: tabulated needs matching nonempty alpha/cost lists");
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (costs[k] < 0.0) throw std::invalid_argument("cost: tabulated costs must be >= 0");
    if (k > 0 && !(alphas[k] > alphas[k - 1])) {
      throw std::invalid_argument("cost: tabulated alphas must be strictly increasing");
    }
    if (k > 0 && costs[k] > costs[k - 1]) {
      throw std::invalid_argument("cost: tabulated costs must be nonincreasing");
    }
  }
  return CostFunction(Kind::tabulated, "tabulated",
                      [a = std::move(alphas), c = std::move(costs)](double alpha) {
                        auto it = std::upper_bound(a.begin(), a.end(), alpha);
                        if (it == a.begin()) return c.front();
                        return c[static_cast<std::size_t>(it - a.begin()) - 1];
                      });
}

CostFunction CostFunction::custom(std::string description, std::function<double(double)> fn) {
  return CostFunction(Kind::custom, std::move(description), std::move(fn));
}

}  // namespace certmf
