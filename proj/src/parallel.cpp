#include "wce/parallel.hpp"

#include <cstdlib>

namespace wce {

namespace {
std::atomic<int> g_threads{0};

int detect_threads() {
    if (const char* env = std::getenv("WCE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}
} // namespace

void set_thread_count(int n) { g_threads.store(n); }

int thread_count() {
    const int n = g_threads.load();
    return n > 0 ? n : detect_threads();
}

} // namespace wce
