#include "bestarm/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace bestarm {

std::size_t default_workers(std::size_t fallback) {
    const char* env = std::getenv("BESTARM_WORKERS");
    if (env == nullptr) return fallback;
    std::string_view text(env);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) return fallback;
    return value;
}

}  // namespace bestarm
