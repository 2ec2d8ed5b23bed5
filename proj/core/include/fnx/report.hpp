// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fnx/config.hpp"

namespace fnx {

/// One verified quantity: value, the tolerance it was held to, and pass/fail.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct SuiteResult {
    std::string name;
    bool pass = true;
    std::vector<CheckResult> checks;
    double seconds = 0.0;

    void add(CheckResult c) {
        pass = pass && c.pass;
        checks.push_back(std::move(c));
    }
    void add(const std::string& n, double value, double tol, bool ok, std::string detail = "") {
        add(CheckResult{n, value, tol, ok, std::move(detail)});
    }
    /// value must be <= tol
    void add_le(const std::string& n, double value, double tol, std::string detail = "") {
        add(CheckResult{n, value, tol, value <= tol, std::move(detail)});
    }
};

/// Renders the versioned JSON report (schema "fnx-report/1"). Every numeric
/// check carries its tolerance; the header carries the grid and jmax it was
/// computed at. Deterministic except for the timestamp field.
std::string render_report_json(const RunConfig& cfg, const std::vector<SuiteResult>& suites,
                               bool with_timestamp = true);

/// Per-scale CSV: one line per (scale, value) pair.
std::string render_per_scale_csv(const std::vector<std::pair<int, double>>& per_scale);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace fnx
