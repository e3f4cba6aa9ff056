// core/include/mtlaug/parallel.h

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTLAUG_PARALLEL_H_
#define MTLAUG_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace mtlaug {

/// Runs fn(0) .. fn(n-1) on up to `jobs` threads (jobs <= 1 runs inline, in
/// order). Tasks must not share mutable state; results therefore do not
/// depend on `jobs`. The first exception thrown by any task is rethrown
/// after all workers stop.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn);

}  // namespace mtlaug

#endif  // MTLAUG_PARALLEL_H_
