// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "gradperm/dataset.hpp"

namespace gradperm {

/// Shortest-round-trip decimal formatting used by every CSV writer, so that
/// reruns produce byte-identical files.
std::string format_double(double value);

/// Strict CSV: comma separated, header row required, '.' decimal point.
/// Missing values and non-numeric cells are rejected with 1-based row
/// numbers. The named outcome column becomes y; all remaining columns become
/// features in file order.
Dataset read_dataset_csv(const std::string& path,
                         const std::string& outcome_column);

/// Write a dataset back out; the outcome column goes last.
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& outcome_column = "y");

}  // namespace gradperm
