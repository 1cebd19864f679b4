// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/diagnostics.hpp"

#include <algorithm>

namespace spectral::diag {
namespace {
thread_local std::vector<std::string> g_warnings;
}

void warn(const std::string& message) {
  if (std::find(g_warnings.begin(), g_warnings.end(), message) == g_warnings.end())
    g_warnings.push_back(message);
}

std::vector<std::string> take_warnings() {
  std::vector<std::string> out;
  out.swap(g_warnings);
  return out;
}

}  // namespace spectral::diag
