#pragma once

#include <string_view>

namespace stdpp::log {

/// Diagnostic messages go to stderr when STDPP_LOG=debug; otherwise dropped.
void debug(std::string_view message);

}  // namespace stdpp::log
