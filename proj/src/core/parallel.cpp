// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/core/parallel.hpp"

#include <atomic>

namespace gsp {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) {
    g_threads.store(n < 0 ? 0 : n);
}

int thread_count() {
    int n = g_threads.load();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int n = end - begin;
    if (n <= 0)
        return;
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{begin};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= end)
                    return;
                fn(i);
            }
        });
    }
    for (auto& t : pool)
        t.join();
}

double parallel_sum(int begin, int end, const std::function<double(int)>& fn) {
    const int n = end - begin;
    if (n <= 0)
        return 0.0;
    std::vector<double> partial(static_cast<size_t>(n));
    parallel_for(begin, end, [&](int i) { partial[static_cast<size_t>(i - begin)] = fn(i); });
    double sum = 0.0;
    for (double v : partial)
        sum += v;
    return sum;
}

} // namespace gsp
