// Copyright 2026 The FairMTL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRMTL_PARALLEL_H_
#define FAIRMTL_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace fairmtl {

// Worker cap from the FAIRMTL_THREADS environment variable. Unset or invalid
// values fall back to std::thread::hardware_concurrency().
int MaxThreads();

// Runs body(i) for i in [0, n) on up to MaxThreads() workers. Each index runs
// exactly once; callers write results by index so the outcome does not depend
// on scheduling. The first exception thrown by any body is rethrown.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fairmtl

#endif  // FAIRMTL_PARALLEL_H_
