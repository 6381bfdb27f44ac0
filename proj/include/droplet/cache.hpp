#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "droplet/qnm.hpp"

namespace droplet::cache {

// Cache directory: DROPLET_QED_CACHE when set, else ~/.cache/droplet-qed,
// else ./.droplet-qed-cache.
std::filesystem::path cache_dir();

// Filename stem for one solve key: n0 rounded to 1e-6, polarization, band
// limit, width cap, and the solver version, so tolerance changes invalidate
// old entries.
std::string table_key(qnm::Polarization pol, double n0, double x_max, double width_cap);

// A validated table on an exact key and version match; nullopt on a miss.
// A present-but-unusable entry also returns nullopt and sets *warning.
std::optional<qnm::ModeTable> load_table(qnm::Polarization pol, double n0, double x_max,
                                         double width_cap, std::string* warning);

// Atomic write-temp-then-rename store. Returns false with *warning set when
// the filesystem refuses; a failed store never aborts the computation.
bool store_table(const qnm::ModeTable& table, std::string* warning);

}  // namespace droplet::cache
