#pragma once

#include "droplet/qnm.hpp"

namespace testutil {

// Built once per test binary and shared across files; covers an emitter at
// a = 2 um with the default 560 nm center (x0 ~ 22.4) plus the five-spacing
// window margin.
inline const droplet::qnm::ModeTable& small_table() {
    static const droplet::qnm::ModeTable table = droplet::qnm::build_mode_table(
        droplet::qnm::Polarization::TE, 1.47, 26.5, 1.2 * droplet::qnm::asymptotic_width(1.47));
    return table;
}

}  // namespace testutil
