#include "droplet/cache.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "droplet/serialize.hpp"

namespace droplet::cache {
namespace {

namespace fs = std::filesystem;

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

double round6(double v) {
    return std::round(v * 1e6) / 1e6;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

fs::path cache_dir() {
    if (const char* env = std::getenv("DROPLET_QED_CACHE"); env && *env) return fs::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return fs::path(home) / ".cache" / "droplet-qed";
    return fs::path(".droplet-qed-cache");
}

std::string table_key(qnm::Polarization pol, double n0, double x_max, double width_cap) {
    std::ostringstream os;
    os << "modes_" << (pol == qnm::Polarization::TE ? "te" : "tm") << "_n" << fixed6(round6(n0))
       << "_x" << fixed6(x_max) << "_w" << fixed6(width_cap) << "_v" << qnm::kSolverVersion;
    return os.str();
}

std::optional<qnm::ModeTable> load_table(qnm::Polarization pol, double n0, double x_max,
                                         double width_cap, std::string* warning) {
    fs::path path = cache_dir() / (table_key(pol, n0, x_max, width_cap) + ".json");
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    try {
        nlohmann::json j = nlohmann::json::parse(read_file(path));
        if (j.value("solver_version", std::string()) != qnm::kSolverVersion) return std::nullopt;
        qnm::ModeTable table = io::mode_table_from_json(j);
        if (table.pol != pol || round6(table.n0) != round6(n0) || table.x_max != x_max ||
            table.width_cap != width_cap)
            throw ValidationError("cache key fields do not match the stored table");
        qnm::validate_mode_table(table);
        return table;
    } catch (const std::exception& e) {
        if (warning)
            *warning = "ignoring unusable cache entry " + path.string() + " (" + e.what() + ")";
        return std::nullopt;
    }
}

bool store_table(const qnm::ModeTable& table, std::string* warning) {
    fs::path dir = cache_dir();
    fs::path path = dir / (table_key(table.pol, table.n0, table.x_max, table.width_cap) + ".json");
    try {
        fs::create_directories(dir);
        fs::path tmp = path;
        tmp += ".tmp" + std::to_string(static_cast<long>(::getpid()));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot open " + tmp.string());
            out << io::mode_table_to_json(table).dump(2) << '\n';
            if (!out) throw std::runtime_error("short write to " + tmp.string());
        }
        fs::rename(tmp, path);
        return true;
    } catch (const std::exception& e) {
        if (warning) *warning = std::string("cache store failed: ") + e.what();
        return false;
    }
}

}  // namespace droplet::cache
