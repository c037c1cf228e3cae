#include "stdpp/version.hpp"

namespace stdpp {

std::string_view version() { return STDPP_VERSION; }

}  // namespace stdpp
