#include "droplet/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "droplet/serialize.hpp"

namespace droplet::config {
namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_fail(int lineno, const std::string& msg) {
    throw ParseError("line " + std::to_string(lineno) + ": " + msg);
}

double number_or_fail(const std::string& value, int lineno, const std::string& key) {
    try {
        return io::parse_double(value);
    } catch (const ParseError&) {
        parse_fail(lineno, "invalid number '" + value + "' for key '" + key + "'");
    }
}

int integer_or_fail(const std::string& value, int lineno, const std::string& key) {
    try {
        return static_cast<int>(io::parse_long(value));
    } catch (const ParseError&) {
        parse_fail(lineno, "invalid integer '" + value + "' for key '" + key + "'");
    }
}

void apply_pair(RunConfig& cfg, const std::string& key, const std::string& value, int lineno) {
    if (key == "n0") {
        cfg.n0 = number_or_fail(value, lineno, key);
    } else if (key == "lambda0_nm") {
        cfg.lambda0_nm = number_or_fail(value, lineno, key);
    } else if (key == "gamma_h_cm") {
        cfg.gamma_h_cm = number_or_fail(value, lineno, key);
    } else if (key == "m") {
        cfg.dipole_dof = integer_or_fail(value, lineno, key);
    } else if (key == "tau0_ns") {
        cfg.tau0_ns = number_or_fail(value, lineno, key);
    } else if (key == "xi") {
        if (value == "real-cavity" || value == "real_cavity") {
            cfg.xi_mode = XiMode::real_cavity;
            cfg.xi_value = 0.0;
        } else {
            cfg.xi_mode = XiMode::explicit_value;
            cfg.xi_value = number_or_fail(value, lineno, key);
        }
    } else if (key == "fsr") {
        if (value == "computed") {
            cfg.fsr_mode = FsrMode::computed;
            cfg.fsr_value = 0.0;
        } else {
            cfg.fsr_mode = FsrMode::explicit_value;
            cfg.fsr_value = number_or_fail(value, lineno, key);
        }
    } else if (key == "a_min") {
        cfg.a_min_um = number_or_fail(value, lineno, key);
    } else if (key == "a_max") {
        cfg.a_max_um = number_or_fail(value, lineno, key);
    } else if (key == "steps") {
        cfg.steps = integer_or_fail(value, lineno, key);
    } else if (key == "method") {
        try {
            cfg.method = emission::method_from_string(value);
        } catch (const ParseError& e) {
            parse_fail(lineno, e.what());
        }
    } else if (key == "out") {
        cfg.output_path = value;
    } else if (key == "format") {
        if (value == "csv")
            cfg.output_format = OutputFormat::csv;
        else if (value == "json")
            cfg.output_format = OutputFormat::json;
        else
            parse_fail(lineno, "unknown format '" + value + "' (expected csv or json)");
    } else {
        parse_fail(lineno, "unknown key '" + key + "'");
    }
}

}  // namespace

std::string to_string(OutputFormat format) {
    return format == OutputFormat::csv ? "csv" : "json";
}

emission::EmitterSpec RunConfig::emitter() const {
    return emission::EmitterSpec{lambda0_nm, gamma_h_cm, dipole_dof, tau0_ns};
}

RunConfig parse_config(const std::string& source) {
    RunConfig cfg;
    std::istringstream is(source);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        size_t eq = stripped.find('=');
        if (eq == std::string::npos) parse_fail(lineno, "expected key=value, got '" + stripped + "'");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) parse_fail(lineno, "empty key");
        apply_pair(cfg, key, value, lineno);
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ValidationError(msg); };
    if (!std::isfinite(cfg.n0) || !(cfg.n0 > 1.0))
        fail("n0 must exceed 1, got " + io::format_double(cfg.n0));
    if (!std::isfinite(cfg.lambda0_nm) || !(cfg.lambda0_nm > 0.0))
        fail("lambda0_nm must be positive, got " + io::format_double(cfg.lambda0_nm));
    if (!std::isfinite(cfg.gamma_h_cm) || !(cfg.gamma_h_cm >= 0.0))
        fail("gamma_h_cm must be non-negative, got " + io::format_double(cfg.gamma_h_cm));
    if (cfg.dipole_dof < 1 || cfg.dipole_dof > 3)
        fail("m must be 1, 2 or 3, got " + std::to_string(cfg.dipole_dof));
    if (!std::isfinite(cfg.tau0_ns) || !(cfg.tau0_ns > 0.0))
        fail("tau0_ns must be positive, got " + io::format_double(cfg.tau0_ns));
    if (cfg.xi_mode == XiMode::explicit_value && !(cfg.xi_value > 0.0))
        fail("xi must be positive, got " + io::format_double(cfg.xi_value));
    if (cfg.fsr_mode == FsrMode::explicit_value && !(cfg.fsr_value > 0.0))
        fail("fsr must be positive, got " + io::format_double(cfg.fsr_value));
    if (!std::isfinite(cfg.a_min_um) || !(cfg.a_min_um > 0.0))
        fail("a_min must be positive, got " + io::format_double(cfg.a_min_um));
    if (!(cfg.a_max_um > cfg.a_min_um))
        fail("a_max must exceed a_min, got a_min=" + io::format_double(cfg.a_min_um) +
             " a_max=" + io::format_double(cfg.a_max_um));
    if (!(cfg.a_max_um < 1e4))
        fail("a_max must stay below 1e4 um, got " + io::format_double(cfg.a_max_um));
    if (cfg.steps < 1) fail("steps must be at least 1, got " + std::to_string(cfg.steps));
}

std::string render_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "n0=" << io::format_double(cfg.n0) << '\n';
    os << "lambda0_nm=" << io::format_double(cfg.lambda0_nm) << '\n';
    os << "gamma_h_cm=" << io::format_double(cfg.gamma_h_cm) << '\n';
    os << "m=" << cfg.dipole_dof << '\n';
    os << "tau0_ns=" << io::format_double(cfg.tau0_ns) << '\n';
    if (cfg.xi_mode == XiMode::real_cavity)
        os << "xi=real-cavity\n";
    else
        os << "xi=" << io::format_double(cfg.xi_value) << '\n';
    if (cfg.fsr_mode == FsrMode::computed)
        os << "fsr=computed\n";
    else
        os << "fsr=" << io::format_double(cfg.fsr_value) << '\n';
    os << "a_min=" << io::format_double(cfg.a_min_um) << '\n';
    os << "a_max=" << io::format_double(cfg.a_max_um) << '\n';
    os << "steps=" << cfg.steps << '\n';
    os << "method=" << emission::to_string(cfg.method) << '\n';
    os << "out=" << cfg.output_path << '\n';
    os << "format=" << to_string(cfg.output_format) << '\n';
    return os.str();
}

}  // namespace droplet::config
