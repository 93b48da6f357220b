#pragma once

#include <string>
#include <vector>

namespace mechet {

/// 17 significant digits, enough for an exact round trip.
std::string format_double(double v);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

std::string csv_row(const std::vector<std::string>& fields);

}  // namespace mechet
