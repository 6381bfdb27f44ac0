#pragma once

#include <string>

#include "droplet/emission.hpp"
#include "droplet/errors.hpp"

namespace droplet::config {

enum class XiMode { real_cavity, explicit_value };
enum class FsrMode { computed, explicit_value };
enum class OutputFormat { csv, json };

std::string to_string(OutputFormat format);

struct RunConfig {
    double n0 = 1.47;
    double lambda0_nm = 560.0;
    double gamma_h_cm = 50.0;
    int dipole_dof = 2;
    double tau0_ns = 1.0;
    XiMode xi_mode = XiMode::real_cavity;
    double xi_value = 0.0;  // meaningful when xi_mode is explicit_value
    FsrMode fsr_mode = FsrMode::computed;
    double fsr_value = 0.0;  // meaningful when fsr_mode is explicit_value
    double a_min_um = 1.0;
    double a_max_um = 20.0;
    int steps = 400;
    emission::Method method = emission::Method::closed_form;
    std::string output_path;  // empty: per-command default
    OutputFormat output_format = OutputFormat::csv;

    bool operator==(const RunConfig&) const = default;

    emission::EmitterSpec emitter() const;
};

// Parses a flat key=value document ('#' starts a comment). Unknown keys,
// missing '=' and malformed values raise ParseError with the line number;
// out-of-bounds values raise ValidationError naming the field and bound.
RunConfig parse_config(const std::string& source);

// Bounds checks shared by the parser and flag overrides.
void validate_config(const RunConfig& config);

// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

}  // namespace droplet::config
