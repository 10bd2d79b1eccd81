#pragma once

#include <iosfwd>
#include <string>

#include "certmf/cmfdoo.hpp"

namespace certmf {

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

struct TraceCsvOptions {
  bool with_samples = false;  // append m_t and cum_samples
};

/// Columns: t,h,i,x_1..x_d,alpha,y,step_cost,cum_cost,rec_x_1..rec_x_d,xi
/// (then m_t,cum_samples when requested).
void write_trace_csv(std::ostream& os, const RunTrace& trace, const TraceCsvOptions& opts = {});
std::string trace_csv(const RunTrace& trace, const TraceCsvOptions& opts = {});

}  // namespace certmf
