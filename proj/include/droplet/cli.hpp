#pragma once

namespace droplet::cli {

// Full command-line front end; returns the process exit status.
// 0: all requested outputs written; 1: configuration or usage error;
// 2: solver or evaluation error; 3: output I/O error.
int run(int argc, const char* const* argv);

}  // namespace droplet::cli
