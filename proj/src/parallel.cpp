#include "dsol/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace dsol {

std::size_t thread_budget() {
  if (const char* env = std::getenv("DSOL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace dsol
