// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace gradperm {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever a JSON or CSV output layout changes.
inline constexpr int kSchemaVersion = 1;

}  // namespace gradperm
