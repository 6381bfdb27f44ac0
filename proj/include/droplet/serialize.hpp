#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "droplet/emission.hpp"
#include "droplet/errors.hpp"
#include "droplet/qnm.hpp"

namespace droplet::io {

// Shortest decimal string that round-trips to the exact double.
std::string format_double(double value);

// Strict full-string parse; throws ParseError on anything else.
double parse_double(const std::string& text);
long parse_long(const std::string& text);

std::string modes_to_csv(const std::vector<qnm::QnmMode>& modes);
std::vector<qnm::QnmMode> modes_from_csv(const std::string& text);

nlohmann::json mode_to_json(const qnm::QnmMode& mode);
qnm::QnmMode mode_from_json(const nlohmann::json& j);

// Full table snapshot, including the solver version: the cache format and the
// JSON output format of the mode command.
nlohmann::json mode_table_to_json(const qnm::ModeTable& table);
qnm::ModeTable mode_table_from_json(const nlohmann::json& j);

std::string decay_curve_to_csv(const emission::DecayCurve& curve);
nlohmann::json decay_curve_to_json(const emission::DecayCurve& curve);

// Two-column spectra such as the density of states.
std::string xy_to_csv(const std::vector<std::pair<double, double>>& rows, const std::string& col_a,
                      const std::string& col_b);
nlohmann::json xy_to_json(const std::vector<std::pair<double, double>>& rows,
                          const std::string& col_a, const std::string& col_b,
                          const nlohmann::json& params);

}  // namespace droplet::io
