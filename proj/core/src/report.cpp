// SPDX-License-Identifier: Apache-2.0
#include "fnx/report.hpp"

#include <ctime>
#include <fstream>

#include "json.hpp"

namespace fnx {

std::string render_report_json(const RunConfig& cfg, const std::vector<SuiteResult>& suites,
                               bool with_timestamp) {
    nlohmann::ordered_json j;
    j["schema"] = "fnx-report/1";
    if (with_timestamp) {
        char buf[64];
        const std::time_t t = std::time(nullptr);
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        j["timestamp"] = buf;
    }
    j["config"] = nlohmann::ordered_json::object();
    j["config"]["dim"] = cfg.dim;
    j["config"]["resolution"] = cfg.resolution;
    j["config"]["box"] = cfg.box_half;
    j["config"]["grid_h"] = cfg.grid().spacing;
    j["config"]["jmax"] = cfg.jmax;
    j["config"]["space"] = std::string(1, cfg.space);
    j["config"]["omega_expr"] = cfg.omega_expr;
    j["config"]["p"] = cfg.p_expr;
    j["config"]["q"] = cfg.q_expr;
    j["config"]["s"] = cfg.s_expr;
    j["config"]["L_phi"] = cfg.L_phi;
    j["config"]["L_psi"] = cfg.L_psi;
    j["config"]["seed"] = cfg.seed;
    j["config"]["hash"] = fnv1a(cfg.canonical());

    bool all = true;
    j["suites"] = nlohmann::ordered_json::array();
    for (const auto& s : suites) {
        nlohmann::ordered_json js;
        js["name"] = s.name;
        js["pass"] = s.pass;
        js["seconds"] = s.seconds;
        js["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : s.checks) {
            nlohmann::ordered_json jc;
            jc["name"] = c.name;
            jc["value"] = c.value;
            jc["tolerance"] = c.tolerance;
            jc["pass"] = c.pass;
            if (!c.detail.empty()) jc["detail"] = c.detail;
            jc["grid"] = cfg.resolution;
            jc["jmax"] = cfg.jmax;
            js["checks"].push_back(std::move(jc));
        }
        j["suites"].push_back(std::move(js));
        all = all && s.pass;
    }
    j["pass"] = all;
    return j.dump(2) + "\n";
}

std::string render_per_scale_csv(const std::vector<std::pair<int, double>>& per_scale) {
    std::string out = "scale,value\n";
    char buf[64];
    for (const auto& [k, v] : per_scale) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", k, v);
        out += buf;
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) fail_config("cannot open for writing: " + path);
    os << text;
}

}  // namespace fnx
