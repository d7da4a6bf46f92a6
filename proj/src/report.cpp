#include "wce/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace wce {

std::string format_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_scan_csv(std::ostream& out, const LdpReport& report) {
    out << "epsilon,estimate,stderr,empirical_rate,theory_rate,tilt_norm,ess\n";
    for (const ScanRow& r : report.rows) {
        out << format_num(r.eps) << ',' << format_num(r.estimate) << ','
            << format_num(r.std_err) << ',' << format_num(r.empirical_rate) << ','
            << format_num(r.theory_rate) << ',' << format_num(r.tilt_norm) << ','
            << format_num(r.ess) << '\n';
    }
}

} // namespace wce
