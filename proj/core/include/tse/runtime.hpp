// Copyright 2026 The tse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace tse {

// Keeps large activation buffers on the heap instead of fresh mmap regions
// and stops the allocator from returning memory after every step. Training
// allocates and frees tens of megabytes per example; without this the page
// faults cost about a third of the step time. No-op outside glibc.
void tune_allocator();

}  // namespace tse
