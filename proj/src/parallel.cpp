#include "nonlocal/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace nonlocal {

namespace {

int initial_threads() {
  if (const char* env = std::getenv("NONLOCAL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> n{initial_threads()};
  return n;
}

}  // namespace

int default_threads() { return thread_setting().load(); }
void set_default_threads(int n) { thread_setting().store(std::max(1, n)); }

}  // namespace nonlocal
