// SPDX-License-Identifier: Apache-2.0
#include "fnx/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace fnx {

namespace {
std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}
}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail_config("cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_config("config: malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail_config("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto as_d = [&] { return std::stod(value); };
        auto as_l = [&] { return std::stol(value); };

        if (key == "grid.dim")
            cfg.dim = static_cast<int>(as_l());
        else if (key == "grid.resolution")
            cfg.resolution = as_l();
        else if (key == "grid.box")
            cfg.box_half = as_d();
        else if (key == "domain.omega_expr")
            cfg.omega_expr = value;
        else if (key == "domain.lipschitz_A")
            cfg.lipschitz_A = as_d();
        else if (key == "exponents.p")
            cfg.p_expr = value;
        else if (key == "exponents.q")
            cfg.q_expr = value;
        else if (key == "exponents.s")
            cfg.s_expr = value;
        else if (key == "kernels.L_phi")
            cfg.L_phi = static_cast<int>(as_l());
        else if (key == "kernels.L_psi")
            cfg.L_psi = static_cast<int>(as_l());
        else if (key == "kernels.phi_radius")
            cfg.phi_radius = as_d();
        else if (key == "kernels.psi_radius")
            cfg.psi_radius = as_d();
        else if (key == "analysis.space")
            cfg.space = value.empty() ? 'F' : value[0];
        else if (key == "analysis.jmax")
            cfg.jmax = static_cast<int>(as_l());
        else if (key == "analysis.a")
            cfg.peetre_a = as_d();
        else if (key == "analysis.r")
            cfg.r_trick = as_d();
        else if (key == "run.seed")
            cfg.seed = static_cast<uint64_t>(std::stoull(value));
        else if (key == "run.out")
            cfg.out_path = value;
        else
            fail_config("config: unknown key '" + key + "' at line " + std::to_string(lineno));
    }
    cfg.validate();
    return cfg;
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os << "[grid]\n";
    os << "dim = " << dim << "\n";
    os << "resolution = " << resolution << "\n";
    os << "box = " << box_half << "\n";
    os << "[domain]\n";
    os << "omega_expr = " << omega_expr << "\n";
    os << "lipschitz_A = " << lipschitz_A << "\n";
    os << "[exponents]\n";
    os << "p = " << p_expr << "\n";
    os << "q = " << q_expr << "\n";
    os << "s = " << s_expr << "\n";
    os << "[kernels]\n";
    os << "L_phi = " << L_phi << "\n";
    os << "L_psi = " << L_psi << "\n";
    os << "phi_radius = " << phi_radius << "\n";
    os << "psi_radius = " << psi_radius << "\n";
    os << "[analysis]\n";
    os << "space = " << space << "\n";
    os << "jmax = " << jmax << "\n";
    os << "a = " << peetre_a << "\n";
    os << "r = " << r_trick << "\n";
    os << "[run]\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

Box RunConfig::box() const { return Box::cube(-box_half, box_half, dim); }

GridGeometry RunConfig::grid() const { return GridGeometry::over_box(box(), resolution); }

void RunConfig::validate() const {
    if (dim < 1 || dim > 2) fail_config("config: dim must be 1 or 2");
    if (!is_pow2(static_cast<size_t>(resolution)))
        fail_config("config: resolution must be a power of two");
    if (box_half <= 0) fail_config("config: box must be positive");
    if (space != 'B' && space != 'F') fail_config("config: space must be B or F");
    if (jmax < 1 || jmax > 12) fail_config("config: jmax must be in [1, 12]");
    // expressions must parse against the declared dimension
    ScalarField::parse(omega_expr, dim - 1);
    ScalarField::parse(p_expr, dim);
    ScalarField::parse(q_expr, dim);
    ScalarField::parse(s_expr, dim);
}

}  // namespace fnx
