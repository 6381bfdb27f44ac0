#include "droplet/serialize.hpp"

#include <charconv>
#include <sstream>

namespace droplet::io {
namespace {

constexpr int kTableFormatVersion = 1;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

const nlohmann::json& require_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing JSON field '") + key + "'");
    return *it;
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ParseError("invalid number '" + text + "'");
    return v;
}

long parse_long(const std::string& text) {
    long v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ParseError("invalid integer '" + text + "'");
    return v;
}

std::string modes_to_csv(const std::vector<qnm::QnmMode>& modes) {
    std::ostringstream os;
    os << "pol,l,j,re_x,im_x,width_x,k_factor\n";
    for (const auto& m : modes) {
        os << qnm::to_string(m.pol) << ',' << m.l << ',' << m.j << ',' << format_double(m.re_x)
           << ',' << format_double(m.im_x) << ',' << format_double(m.width_x) << ','
           << format_double(m.k_factor) << '\n';
    }
    return os.str();
}

std::vector<qnm::QnmMode> modes_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("line 1: empty mode CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "pol,l,j,re_x,im_x,width_x,k_factor")
        throw ParseError("line 1: unexpected mode CSV header '" + line + "'");
    std::vector<qnm::QnmMode> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split(line, ',');
        if (cols.size() != 7)
            throw ParseError("line " + std::to_string(lineno) + ": expected 7 columns, got " +
                             std::to_string(cols.size()));
        try {
            qnm::QnmMode m;
            m.pol = qnm::polarization_from_string(cols[0]);
            m.l = static_cast<int>(parse_long(cols[1]));
            m.j = static_cast<int>(parse_long(cols[2]));
            m.re_x = parse_double(cols[3]);
            m.im_x = parse_double(cols[4]);
            m.width_x = parse_double(cols[5]);
            m.k_factor = parse_double(cols[6]);
            out.push_back(m);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::json mode_to_json(const qnm::QnmMode& mode) {
    return nlohmann::json{{"pol", qnm::to_string(mode.pol)}, {"l", mode.l},
                          {"j", mode.j},                     {"re_x", mode.re_x},
                          {"im_x", mode.im_x},               {"width_x", mode.width_x},
                          {"k_factor", mode.k_factor}};
}

qnm::QnmMode mode_from_json(const nlohmann::json& j) {
    try {
        qnm::QnmMode m;
        m.pol = qnm::polarization_from_string(require_field(j, "pol").get<std::string>());
        m.l = require_field(j, "l").get<int>();
        m.j = require_field(j, "j").get<int>();
        m.re_x = require_field(j, "re_x").get<double>();
        m.im_x = require_field(j, "im_x").get<double>();
        m.width_x = require_field(j, "width_x").get<double>();
        m.k_factor = require_field(j, "k_factor").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed mode JSON: ") + e.what());
    }
}

nlohmann::json mode_table_to_json(const qnm::ModeTable& table) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& m : table.modes) modes.push_back(mode_to_json(m));
    return nlohmann::json{{"format_version", kTableFormatVersion},
                          {"solver_version", qnm::kSolverVersion},
                          {"n0", table.n0},
                          {"pol", qnm::to_string(table.pol)},
                          {"x_max", table.x_max},
                          {"width_cap", table.width_cap},
                          {"fsr_x", table.fsr_x},
                          {"modes", modes}};
}

qnm::ModeTable mode_table_from_json(const nlohmann::json& j) {
    try {
        if (require_field(j, "format_version").get<int>() != kTableFormatVersion)
            throw ParseError("unsupported mode table format version");
        qnm::ModeTable table;
        table.n0 = require_field(j, "n0").get<double>();
        table.pol = qnm::polarization_from_string(require_field(j, "pol").get<std::string>());
        table.x_max = require_field(j, "x_max").get<double>();
        table.width_cap = require_field(j, "width_cap").get<double>();
        table.fsr_x = require_field(j, "fsr_x").get<double>();
        for (const auto& item : require_field(j, "modes")) table.modes.push_back(mode_from_json(item));
        return table;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed mode table JSON: ") + e.what());
    }
}

std::string decay_curve_to_csv(const emission::DecayCurve& curve) {
    std::ostringstream os;
    os << "radius_um,rate_vs_bulk\n";
    for (const auto& [a, rate] : curve.points)
        os << format_double(a) << ',' << format_double(rate) << '\n';
    return os.str();
}

nlohmann::json decay_curve_to_json(const emission::DecayCurve& curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [a, rate] : curve.points)
        points.push_back(nlohmann::json{{"radius_um", a}, {"rate_vs_bulk", rate}});
    const auto& p = curve.params;
    nlohmann::json params{{"n0", p.n0},
                          {"lambda0_nm", p.emitter.lambda0_nm},
                          {"gamma_h_cm", p.emitter.gamma_h_cm},
                          {"dipole_dof", p.emitter.dipole_dof},
                          {"tau0_ns", p.emitter.tau0_ns},
                          {"xi_lc", p.xi_lc},
                          {"method", emission::to_string(p.method)},
                          {"fsr_x", p.fsr_x}};
    nlohmann::json out{{"points", points}, {"params", params}};
    if (!curve.warnings.empty()) out["warnings"] = curve.warnings;
    return out;
}

std::string xy_to_csv(const std::vector<std::pair<double, double>>& rows, const std::string& col_a,
                      const std::string& col_b) {
    std::ostringstream os;
    os << col_a << ',' << col_b << '\n';
    for (const auto& [x, y] : rows) os << format_double(x) << ',' << format_double(y) << '\n';
    return os.str();
}

nlohmann::json xy_to_json(const std::vector<std::pair<double, double>>& rows,
                          const std::string& col_a, const std::string& col_b,
                          const nlohmann::json& params) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [x, y] : rows) points.push_back(nlohmann::json{{col_a, x}, {col_b, y}});
    return nlohmann::json{{"points", points}, {"params", params}};
}

}  // namespace droplet::io
