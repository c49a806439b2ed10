#pragma once

// Block/grid orchestration.
//
// Each call to parallel_for is one barrier-delimited phase: every task
// gets its own warp Engine, tasks may run on any worker thread in any
// order, and the call returns only after all of them finish. Tasks must
// write disjoint output slots, which is what makes results independent of
// thread count and warp order. Counters of all warp engines are summed.

#include "tcu/engine.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tcu {

enum class WarpOrder : std::uint8_t { Forward, Reverse };

struct LaunchOptions {
    unsigned threads = 1;
    WarpOrder order = WarpOrder::Forward;
    EngineOptions engine{};
};

class Launcher {
public:
    explicit Launcher(LaunchOptions options = {}) : options_(options)
    {
        if (options_.threads == 0)
            options_.threads = 1;
    }

    const LaunchOptions& options() const noexcept { return options_; }
    const CostCounters& counters() const noexcept { return counters_; }

    // Kernel launches issued so far.
    std::uint64_t passes() const noexcept { return passes_; }
    void begin_pass() noexcept { ++passes_; }

    template <typename Body>
    void parallel_for(std::size_t count, Body&& body)
    {
        if (count == 0)
            return;
        std::vector<CostCounters> per_task(count);
        const std::size_t workers = std::min<std::size_t>(options_.threads, count);

        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto worker = [&](std::size_t t) {
            for (std::size_t j = t; j < count; j += workers) {
                const std::size_t i = options_.order == WarpOrder::Forward ? j : count - 1 - j;
                try {
                    Engine engine(options_.engine);
                    body(i, engine);
                    per_task[i] = engine.counters();
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    return;
                }
            }
        };

        if (workers == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t)
                pool.emplace_back(worker, t);
            for (auto& th : pool)
                th.join();
        }
        if (failure)
            std::rethrow_exception(failure);

        for (const auto& c : per_task)
            counters_ += c;
    }

private:
    LaunchOptions options_;
    CostCounters counters_;
    std::uint64_t passes_ = 0;
};

} // namespace tcu
