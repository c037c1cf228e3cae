#include "stdpp/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace stdpp::log {

void debug(std::string_view message) {
    static const bool enabled = [] {
        const char* env = std::getenv("STDPP_LOG");
        return env != nullptr && std::string(env) == "debug";
    }();
    if (!enabled) return;
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << "[stdpp] " << message << '\n';
}

}  // namespace stdpp::log
