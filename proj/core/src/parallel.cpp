#include "ergograph/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace ergograph {
namespace {

std::atomic<int> g_threads{0};

int env_threads() {
  const char* env = std::getenv("ERGOGRAPH_THREADS");
  if (env == nullptr) return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int thread_count() {
  if (const int n = g_threads.load(); n > 0) return n;
  if (const int n = env_threads(); n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(int n) { g_threads.store(std::max(0, n)); }

int chunk_count(std::size_t n) {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(n, 1)));
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body) {
  if (n == 0) return;
  const int chunks = chunk_count(n);
  if (chunks == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  auto run = [&](int c) {
    const std::size_t b = n * c / chunks, e = n * (c + 1) / chunks;
    try {
      body(b, e, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  for (int c = 1; c < chunks; ++c) workers.emplace_back(run, c);
  run(0);
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ergograph
