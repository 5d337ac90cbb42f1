#include "obbq/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace obbq {

int worker_threads() {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("OBBQ_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) n = std::min(n, cap);
        } catch (const std::exception&) {
        }
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body, int threads) {
    if (threads <= 0) threads = worker_threads();
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
    if (t <= 1) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    const std::size_t chunk = (count + t - 1) / t;
    for (std::size_t w = 0; w < t; ++w) {
        const std::size_t b = w * chunk, e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, w, b, e] {
            try {
                body(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& ep : errors)
        if (ep) std::rethrow_exception(ep);
}

}  // namespace obbq
