// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace spectral::diag {

// Per-thread warning log. Each experiment runs on one thread, so a run can
// drain exactly the warnings it caused. Repeated messages are stored once.
void warn(const std::string& message);
std::vector<std::string> take_warnings();

}  // namespace spectral::diag
