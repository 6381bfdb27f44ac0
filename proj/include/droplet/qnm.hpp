#pragma once

#include <complex>
#include <string>
#include <vector>

#include "droplet/errors.hpp"

namespace droplet::qnm {

using complexd = std::complex<double>;

enum class Polarization { TE, TM };

std::string to_string(Polarization pol);
Polarization polarization_from_string(const std::string& text);

// One resonance: a root of the characteristic function with Im x < 0.
struct QnmMode {
    Polarization pol = Polarization::TE;
    int l = 0;        // angular momentum order
    int j = 0;        // radial order, 1-based along increasing Re x
    double re_x = 0.0;
    double im_x = 0.0;      // < 0: outgoing-wave decay branch
    double width_x = 0.0;   // 2 * |im_x|
    double k_factor = 0.0;  // peak density-of-states enhancement
};

// Characteristic function whose zeros are the resonances: the log-derivative
// mismatch of the interior regular solution and the exterior outgoing one.
complexd characteristic_value(Polarization pol, int l, double n0, complexd x);

// dF/dx from the closed-form derivative of both log-derivative factors.
complexd characteristic_derivative(Polarization pol, int l, double n0, complexd x);

// Large-j limit of width_x: log((n0+1)/(n0-1)) / n0.
double asymptotic_width(double n0);

// All modes with 0 < Re x <= x_max and width_x <= max_width for one order l.
// Radial numbers j are assigned over the full certified chain before the
// width filter, so a cap below the asymptotic width drops only trailing j.
// The root count is certified by an argument-principle contour; a mismatch
// that survives recovery raises MissedRootError, a seed that refuses to
// converge raises ConvergenceError.
std::vector<QnmMode> find_modes(Polarization pol, int l, double n0, double x_max,
                                double max_width);

// Zeros of the characteristic function strictly inside the rectangle
// [lo.real(), hi.real()] x [lo.imag(), hi.imag()], counted by the winding of
// an entire rescaling of the matching determinant. Known roots in `deflate`
// are divided out along the boundary (keeping phase increments resolvable)
// and those lying inside are added back to the returned count.
int count_roots(Polarization pol, int l, double n0, complexd lo, complexd hi,
                const std::vector<complexd>& deflate);

inline constexpr const char* kSolverVersion = "1";

struct ModeTable {
    double n0 = 0.0;
    Polarization pol = Polarization::TE;
    double x_max = 0.0;
    double width_cap = 0.0;
    double fsr_x = 0.0;  // j=1 spacing bracketing x_max/2; 0 when undefined
    std::vector<QnmMode> modes;  // sorted by (l, j)
};

// Solves every order l >= 1 whose band reaches x_max and validates the result.
// threads = 0 picks the hardware concurrency.
ModeTable build_mode_table(Polarization pol, double n0, double x_max, double width_cap,
                           unsigned threads = 0);

// Structural checks every table must satisfy, including a cold re-evaluation
// of each stored root. Throws ValidationError naming the first offender.
void validate_mode_table(const ModeTable& table);

// Spacing between the two j=1 modes bracketing x0; RangeError when x0 is not
// bracketed by the table's j=1 chain.
double fsr_spacing(const ModeTable& table, double x0);

// The j=1 mode with Re x nearest x0; ties resolve toward the smaller width.
// RangeError when x0 lies outside the j=1 chain's span.
const QnmMode& least_leaky_mode(const ModeTable& table, double x0);

}  // namespace droplet::qnm
