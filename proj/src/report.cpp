#include "mechet/report.hpp"

#include <cmath>
#include <cstdio>

namespace mechet {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t n = 0; n < fields.size(); ++n) {
        if (n) row += ',';
        row += csv_field(fields[n]);
    }
    row += "\r\n";
    return row;
}

}  // namespace mechet
