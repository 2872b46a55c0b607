#include "mra/parallel.hpp"

namespace mra {
namespace {
std::atomic<std::size_t> configured{0};
}

std::size_t worker_count() {
  const std::size_t w = configured.load();
  if (w != 0) return w;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_worker_count(std::size_t workers) { configured.store(workers); }

}  // namespace mra
