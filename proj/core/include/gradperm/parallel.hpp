// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace gradperm {

/// Resolve a worker-count hint: a positive hint wins, then the
/// GRADPERM_WORKERS environment variable, then hardware concurrency.
/// Always at least 1.
int resolve_workers(int hint);

/// Run fn(i) for every i in [0, count) on up to `workers` threads.
///
/// Tasks must be independent; callers that need ordered output write into
/// preallocated slots indexed by i, which keeps results identical for any
/// worker count. The first exception thrown by a task is rethrown on the
/// calling thread after all workers join.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gradperm
