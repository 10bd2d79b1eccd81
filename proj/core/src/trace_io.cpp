#include "certmf/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace certmf {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, const TraceCsvOptions& opts) {
  const std::size_t d = trace.empty() ? 0 : trace.front().x.size();
  os << "t,h,i";
  for (std::size_t j = 1; j <= d; ++j) os << ",x_" << j;
  os << ",alpha,y,step_cost,cum_cost";
  for (std::size_t j = 1; j <= d; ++j) os << ",rec_x_" << j;
  os << ",xi";
  if (opts.with_samples) os << ",m_t,cum_samples";
  os << '\n';
  for (const auto& r : trace) {
    os << r.t << ',' << r.node.depth << ',' << r.node.index;
    for (double c : r.x) os << ',' << format_double(c);
    os << ',' << format_double(r.alpha) << ',' << format_double(r.y) << ','
       << format_double(r.step_cost) << ',' << format_double(r.cum_cost);
    for (double c : r.rec) os << ',' << format_double(c);
    os << ',' << format_double(r.xi);
    if (opts.with_samples) os << ',' << r.m << ',' << r.cum_samples;
    os << '\n';
  }
}

std::string trace_csv(const RunTrace& trace, const TraceCsvOptions& opts) {
  std::ostringstream os;
  write_trace_csv(os, trace, opts);
  return os.str();
}

}  // namespace certmf
