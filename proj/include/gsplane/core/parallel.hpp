// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace gsp {

// Process-wide worker count used by parallel_for. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [begin, end). Iterations must write to disjoint state.
// Results are identical for any worker count because no cross-iteration
// reduction happens here.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

// Deterministic reduction: partials are produced per index and summed in
// index order, so the result does not depend on the worker count.
double parallel_sum(int begin, int end, const std::function<double(int)>& fn);

} // namespace gsp
