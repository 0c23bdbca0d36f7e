#include "gelab/parallel.hpp"

#include <algorithm>

namespace gelab {

namespace {
std::atomic<std::size_t> g_workers{1};
}

void set_worker_count(std::size_t workers) { g_workers.store(std::max<std::size_t>(workers, 1)); }

std::size_t worker_count() { return g_workers.load(); }

}  // namespace gelab
