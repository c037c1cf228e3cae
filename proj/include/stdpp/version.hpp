#pragma once

#include <string_view>

namespace stdpp {

/// Library version, e.g. "0.1.0".
std::string_view version();

}  // namespace stdpp
