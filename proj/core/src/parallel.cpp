#include "pulse/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace pulse {

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PULSE_THREADS")) {
    const std::string_view text(env);
    std::size_t cap = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    // An explicit limit may exceed the core count (useful for determinism checks).
    if (ec == std::errc() && end == text.data() + text.size() && cap > 0) n = cap;
  }
  return n;
}

}  // namespace pulse
