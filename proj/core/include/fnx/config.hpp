// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fnx/expr.hpp"
#include "fnx/grid.hpp"

namespace fnx {

/// Run configuration: a flat key = value text format with [section] headers.
/// Unknown keys are rejected; every field has a reproducible default, so a
/// config file only needs the overrides.
struct RunConfig {
    // [grid]
    int dim = 2;
    long resolution = 256;   // must be a power of two
    double box_half = 1.0;   // grid covers [-box_half, box_half]^dim

    // [domain]
    std::string omega_expr = "0.2*sin(3*x1)";
    double lipschitz_A = 1.0;

    // [exponents]
    std::string p_expr = "2 + 1/(1 + x1^2 + x2^2)";
    std::string q_expr = "2 + 1/(2 + sin(x1))";
    std::string s_expr = "0.5 + 0.25/(1 + x1^2)";

    // [kernels]
    int L_phi = 4;
    int L_psi = 6;
    double phi_radius = 0.0;  // 0 = library default
    double psi_radius = 0.0;

    // [analysis]
    char space = 'F';        // 'B' or 'F'
    int jmax = 8;
    double peetre_a = 0.0;   // 0 = auto: required bound + 0.5
    double r_trick = 0.0;    // 0 = auto: geometric mean of the window

    // [run]
    uint64_t seed = 20240601;
    std::string out_path;

    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text);
    /// Canonical text rendering (stable field order); config hashes use this.
    std::string canonical() const;

    Box box() const;
    GridGeometry grid() const;
    void validate() const;  // throws Error(config)
};

}  // namespace fnx
