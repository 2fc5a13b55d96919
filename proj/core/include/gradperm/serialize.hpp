// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <string>

#include "gradperm/permtest.hpp"
#include "gradperm/simgen.hpp"

namespace gradperm {

using Json = nlohmann::ordered_json;

Json to_json(const NetworkConfig& config);
Json to_json(const SmoothingPolicy& policy);
Json to_json(const TestConfig& config);
Json to_json(const TestResult& result, const TestConfig& config);
Json to_json(const ProtocolResult& protocol, const TestConfig& config);
Json to_json(const SimSetting& setting);
Json to_json(const StudyReport& report, const TestConfig& config);

/// Flat one-line-per-simulation CSV for plotting power curves.
std::string study_csv(const StudyReport& report);

/// Fixed-width summary row in the style of the power/Type-I tables.
std::string study_summary_table(const StudyReport& report);

/// Multi-row power table for the five-feature setting, one row per tested
/// feature with its association label (linear, quadratic, ...).
std::string nonlin5_summary_table(const std::vector<StudyReport>& reports);

/// Write JSON with a trailing newline, 2-space indent.
void write_json_file(const std::string& path, const Json& value);

}  // namespace gradperm
