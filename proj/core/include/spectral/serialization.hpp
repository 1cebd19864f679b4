// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "spectral/adapter.hpp"
#include "spectral/encoder.hpp"
#include "spectral/matrix.hpp"

namespace spectral {

// Matrix: {"rows": int, "cols": int, "data": [row-major doubles]}.
nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// Adapter: {"tag", "alpha", "r", "k", "matrices": {name: Matrix}} where alpha,
// r and k are null when the variant has none. Vectors (sigma_p, magnitude)
// are stored as 1×n matrices.
nlohmann::json to_json(const Adapter& a);
Adapter adapter_from_json(const nlohmann::json& j);

// Model: dims, flags, input_proj, classifier and per-layer slots. A slot is
// {"dense": Matrix} or {"adapter": Adapter}.
nlohmann::json to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace spectral
