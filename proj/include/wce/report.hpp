#pragma once

#include "wce/ldp.hpp"

#include <iosfwd>
#include <string>

namespace wce {

// Locale-independent decimal with 17 significant digits; "inf"/"nan" for
// non-finite values.
std::string format_num(double v);

// Columns: epsilon,estimate,stderr,empirical_rate,theory_rate,tilt_norm,ess
void write_scan_csv(std::ostream& out, const LdpReport& report);

} // namespace wce
