#include "droplet/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "droplet/cache.hpp"
#include "droplet/config.hpp"
#include "droplet/emission.hpp"
#include "droplet/errors.hpp"
#include "droplet/qnm.hpp"
#include "droplet/serialize.hpp"

namespace droplet::cli {
namespace {

namespace cfg = droplet::config;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCompute = 2;
constexpr int kExitIo = 3;

struct FlagOverrides {
    std::optional<std::string> config_path;
    std::optional<double> n0, lambda0_nm, gamma_h_cm, tau0_ns, a_min, a_max;
    std::optional<int> dipole_dof, steps;
    std::optional<std::string> xi, fsr, method, out, format;
};

void add_common_flags(CLI::App* app, FlagOverrides& fo) {
    app->add_option("--config", fo.config_path, "flat key=value configuration file");
    app->add_option("--n0", fo.n0, "refractive index contrast (> 1)");
    app->add_option("--lambda0-nm", fo.lambda0_nm, "fluorescence center wavelength [nm]");
    app->add_option("--gamma-h-cm", fo.gamma_h_cm, "homogeneous width as a wavenumber [1/cm]");
    app->add_option("--m", fo.dipole_dof, "dipole degrees of freedom (1, 2 or 3)");
    app->add_option("--tau0-ns", fo.tau0_ns, "vacuum lifetime [ns]");
    app->add_option("--xi", fo.xi, "local-field factor: real-cavity or a number");
    app->add_option("--fsr", fo.fsr, "free spectral range: computed or a number");
    app->add_option("--a-min", fo.a_min, "sweep start radius [um]");
    app->add_option("--a-max", fo.a_max, "sweep end radius [um]");
    app->add_option("--steps", fo.steps, "sweep point count");
    app->add_option("--method", fo.method, "closed_form or mode_sum");
    app->add_option("--out", fo.out, "output file path");
    app->add_option("--format", fo.format, "csv or json");
}

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

cfg::RunConfig resolve_config(const FlagOverrides& fo) {
    cfg::RunConfig c;
    if (fo.config_path) c = cfg::parse_config(read_file_or_throw(*fo.config_path));
    if (fo.n0) c.n0 = *fo.n0;
    if (fo.lambda0_nm) c.lambda0_nm = *fo.lambda0_nm;
    if (fo.gamma_h_cm) c.gamma_h_cm = *fo.gamma_h_cm;
    if (fo.dipole_dof) c.dipole_dof = *fo.dipole_dof;
    if (fo.tau0_ns) c.tau0_ns = *fo.tau0_ns;
    if (fo.xi) {
        if (*fo.xi == "real-cavity" || *fo.xi == "real_cavity") {
            c.xi_mode = cfg::XiMode::real_cavity;
            c.xi_value = 0.0;
        } else {
            c.xi_mode = cfg::XiMode::explicit_value;
            c.xi_value = io::parse_double(*fo.xi);
        }
    }
    if (fo.fsr) {
        if (*fo.fsr == "computed") {
            c.fsr_mode = cfg::FsrMode::computed;
            c.fsr_value = 0.0;
        } else {
            c.fsr_mode = cfg::FsrMode::explicit_value;
            c.fsr_value = io::parse_double(*fo.fsr);
        }
    }
    if (fo.a_min) c.a_min_um = *fo.a_min;
    if (fo.a_max) c.a_max_um = *fo.a_max;
    if (fo.steps) c.steps = *fo.steps;
    if (fo.method) c.method = emission::method_from_string(*fo.method);
    if (fo.out) c.output_path = *fo.out;
    if (fo.format) {
        if (*fo.format == "csv")
            c.output_format = cfg::OutputFormat::csv;
        else if (*fo.format == "json")
            c.output_format = cfg::OutputFormat::json;
        else
            throw ParseError("unknown format '" + *fo.format + "' (expected csv or json)");
    }
    cfg::validate_config(c);
    return c;
}

// The table band the sweep needs: up to the largest size parameter plus the
// five-fsr evaluation margin used by the spectral sums.
double table_band_limit(const cfg::RunConfig& c) {
    double x_hi = c.emitter().alpha_um() * c.a_max_um;
    return x_hi + 4.1;
}

qnm::ModeTable obtain_table(const cfg::RunConfig& c, double x_max) {
    double width_cap = 1.2 * qnm::asymptotic_width(c.n0);
    std::string warning;
    if (auto cached = cache::load_table(qnm::Polarization::TE, c.n0, x_max, width_cap, &warning)) {
        if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
        return std::move(*cached);
    }
    if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
    qnm::ModeTable table = qnm::build_mode_table(qnm::Polarization::TE, c.n0, x_max, width_cap);
    std::string store_warning;
    if (!cache::store_table(table, &store_warning))
        std::cerr << "warning: " << store_warning << '\n';
    return table;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to output file '" + path + "'");
}

std::vector<double> sweep_radii(const cfg::RunConfig& c) {
    std::vector<double> radii;
    radii.reserve(c.steps);
    if (c.steps == 1) {
        radii.push_back(c.a_min_um);
        return radii;
    }
    for (int i = 0; i < c.steps; ++i)
        radii.push_back(c.a_min_um + (c.a_max_um - c.a_min_um) * i / (c.steps - 1));
    return radii;
}

double resolve_xi(const cfg::RunConfig& c) {
    return c.xi_mode == cfg::XiMode::real_cavity ? emission::real_cavity_factor(c.n0)
                                                 : c.xi_value;
}

// Stage-tagged execution so each error names the phase that failed.
struct StagedError {
    int code;
    std::string message;
};

template <typename Fn>
void run_stage(const char* stage, int code, Fn&& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        throw StagedError{code, std::string(stage) + " error: " + e.what()};
    } catch (const ValidationError& e) {
        throw StagedError{code, std::string(stage) + " error: " + e.what()};
    } catch (const DomainError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const OverflowError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const ConvergenceError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const MissedRootError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const RangeError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const RegimeError& e) {
        throw StagedError{kExitCompute, std::string(stage) + " error: " + e.what()};
    } catch (const std::exception& e) {
        throw StagedError{code, std::string(stage) + " error: " + e.what()};
    }
}

int cmd_modes(const FlagOverrides& fo) {
    cfg::RunConfig c;
    run_stage("config", kExitConfig, [&] { c = resolve_config(fo); });
    qnm::ModeTable table;
    run_stage("solve", kExitCompute, [&] { table = obtain_table(c, table_band_limit(c)); });
    std::string path = c.output_path.empty()
                           ? (c.output_format == cfg::OutputFormat::csv ? "modes.csv" : "modes.json")
                           : c.output_path;
    run_stage("write", kExitIo, [&] {
        if (c.output_format == cfg::OutputFormat::csv)
            write_file(path, io::modes_to_csv(table.modes));
        else
            write_file(path, io::mode_table_to_json(table).dump(2) + "\n");
    });
    double band_center = 0.5 * (c.a_min_um + c.a_max_um) * c.emitter().alpha_um();
    double fsr = table.fsr_x;
    try {
        fsr = qnm::fsr_spacing(table, band_center);
    } catch (const RangeError&) {
    }
    std::cout << "modes: " << table.modes.size() << " (TE, n0=" << io::format_double(c.n0)
              << ", x <= " << io::format_double(table.x_max) << ") -> " << path << '\n';
    std::cout << "fsr at band center x=" << io::format_double(band_center) << ": "
              << io::format_double(fsr) << '\n';
    std::cout << "asymptotic width: " << io::format_double(qnm::asymptotic_width(c.n0)) << '\n';
    return kExitOk;
}

int cmd_dos(const FlagOverrides& fo) {
    cfg::RunConfig c;
    run_stage("config", kExitConfig, [&] { c = resolve_config(fo); });
    qnm::ModeTable table;
    run_stage("solve", kExitCompute, [&] { table = obtain_table(c, table_band_limit(c)); });
    std::vector<std::pair<double, double>> rows;
    run_stage("evaluate", kExitCompute, [&] {
        emission::EmitterSpec emitter = c.emitter();
        for (double a : sweep_radii(c)) {
            double x = emitter.alpha_um() * a;
            double extra = emitter.beta_um() * a;
            rows.emplace_back(x, emission::density_of_states(x, table, extra));
        }
    });
    std::string path = c.output_path.empty()
                           ? (c.output_format == cfg::OutputFormat::csv ? "dos.csv" : "dos.json")
                           : c.output_path;
    run_stage("write", kExitIo, [&] {
        if (c.output_format == cfg::OutputFormat::csv) {
            write_file(path, io::xy_to_csv(rows, "x", "dos_over_rho0"));
        } else {
            nlohmann::json params{{"n0", c.n0},
                                  {"lambda0_nm", c.lambda0_nm},
                                  {"gamma_h_cm", c.gamma_h_cm},
                                  {"a_min_um", c.a_min_um},
                                  {"a_max_um", c.a_max_um},
                                  {"steps", c.steps}};
            write_file(path, io::xy_to_json(rows, "x", "dos_over_rho0", params).dump(2) + "\n");
        }
    });
    std::cout << "dos: " << rows.size() << " points -> " << path << '\n';
    return kExitOk;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    size_t dot = path.rfind('.');
    size_t slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

int cmd_decay_curve(const FlagOverrides& fo, bool fig1, const std::string& overlay) {
    cfg::RunConfig c;
    run_stage("config", kExitConfig, [&] {
        c = resolve_config(fo);
        if (fig1) {
            c.a_min_um = 1.0;
            c.a_max_um = 20.0;
            c.steps = 400;
            cfg::validate_config(c);
        }
    });

    const qnm::ModeTable* table_ptr = nullptr;
    qnm::ModeTable table;
    bool need_table =
        c.method == emission::Method::mode_sum || c.fsr_mode == cfg::FsrMode::computed;
    if (need_table) {
        run_stage("solve", kExitCompute, [&] {
            table = obtain_table(c, table_band_limit(c));
            table_ptr = &table;
        });
    }

    double fsr_x = 0.0;
    run_stage("evaluate", kExitCompute, [&] {
        if (c.fsr_mode == cfg::FsrMode::explicit_value) {
            fsr_x = c.fsr_value;
        } else {
            double band_center = 0.5 * (c.a_min_um + c.a_max_um) * c.emitter().alpha_um();
            try {
                fsr_x = qnm::fsr_spacing(table, band_center);
            } catch (const RangeError&) {
                fsr_x = table.fsr_x;
            }
        }
    });

    double xi_base = 0.0;
    run_stage("config", kExitConfig, [&] { xi_base = resolve_xi(c); });

    std::vector<double> xi_scales = fig1 ? std::vector<double>{1.0, 0.95, 0.90}
                                         : std::vector<double>{1.0};
    std::string base_path = c.output_path.empty()
                                ? (c.output_format == cfg::OutputFormat::csv ? "decay_curve.csv"
                                                                             : "decay_curve.json")
                                : c.output_path;
    std::vector<double> radii = sweep_radii(c);

    for (double scale : xi_scales) {
        double xi = xi_base * scale;
        emission::DecayCurve curve;
        run_stage("evaluate", kExitCompute, [&] {
            curve = emission::build_decay_curve(c.emitter(), c.n0, radii, xi, c.method, table_ptr,
                                                fsr_x);
        });
        for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';
        std::string path = base_path;
        if (fig1) {
            char tag[16];
            std::snprintf(tag, sizeof(tag), "_xi%.2f", scale);
            path = with_suffix(base_path, tag);
        }
        run_stage("write", kExitIo, [&] {
            if (c.output_format == cfg::OutputFormat::csv) {
                write_file(path, io::decay_curve_to_csv(curve));
            } else {
                nlohmann::json j = io::decay_curve_to_json(curve);
                if (!overlay.empty()) j["params"]["overlay_ref"] = overlay;
                write_file(path, j.dump(2) + "\n");
            }
        });
        std::cout << "decay-curve: " << curve.points.size() << " points (xi="
                  << io::format_double(xi) << ") -> " << path << '\n';
    }
    if (!overlay.empty() && c.output_format == cfg::OutputFormat::csv)
        std::cerr << "warning: --overlay is recorded in json output only; csv files carry no "
                     "metadata\n";
    return kExitOk;
}

int cmd_extract_lfc(const FlagOverrides& fo, double g) {
    cfg::RunConfig c;
    run_stage("config", kExitConfig, [&] { c = resolve_config(fo); });
    double xi = 0.0, xi_rc = 0.0;
    run_stage("evaluate", kExitCompute, [&] {
        xi = emission::extract_local_field_factor(g, c.n0);
        xi_rc = emission::real_cavity_factor(c.n0);
    });
    std::cout << "xi_lc = " << io::format_double(xi) << '\n';
    std::cout << "xi_rc(n0=" << io::format_double(c.n0) << ") = " << io::format_double(xi_rc)
              << '\n';
    std::cout << "ratio xi_lc/xi_rc = " << io::format_double(xi / xi_rc) << '\n';
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"morphology-dependent resonances and surface-emitter decay rates "
                 "of a dielectric microsphere"};
    app.require_subcommand(1);

    FlagOverrides fo_modes, fo_dos, fo_curve, fo_extract;
    bool fig1 = false;
    std::string overlay;
    double g_value = 0.0;

    CLI::App* modes = app.add_subcommand("modes", "solve and export the TE mode table");
    add_common_flags(modes, fo_modes);
    CLI::App* dos = app.add_subcommand("dos", "surface density of states over the sweep band");
    add_common_flags(dos, fo_dos);
    CLI::App* curve = app.add_subcommand("decay-curve", "decay rate versus droplet radius");
    add_common_flags(curve, fo_curve);
    curve->add_flag("--fig1", fig1,
                    "preset: a in [1, 20] um, 400 steps, three local-field factors");
    curve->add_option("--overlay", overlay,
                      "path reference to an experimental data file (json metadata only)");
    CLI::App* extract = app.add_subcommand("extract-lfc",
                                           "local-field factor from a measured asymptotic rate");
    add_common_flags(extract, fo_extract);
    CLI::Option* gopt = extract->add_option("--g", g_value, "measured large-radius rate ratio");
    gopt->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (modes->parsed()) return cmd_modes(fo_modes);
        if (dos->parsed()) return cmd_dos(fo_dos);
        if (curve->parsed()) return cmd_decay_curve(fo_curve, fig1, overlay);
        if (extract->parsed()) return cmd_extract_lfc(fo_extract, g_value);
    } catch (const StagedError& e) {
        std::cerr << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitCompute;
    }
    return kExitConfig;
}

}  // namespace droplet::cli
