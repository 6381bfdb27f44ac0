#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "droplet/errors.hpp"
#include "droplet/qnm.hpp"

namespace droplet::emission {

using complexd = std::complex<double>;

struct SphereSpec {
    double n0 = 1.47;        // refractive index, > 1
    double radius_um = 1.0;  // a, in (0, 1e4)
};

struct EmitterSpec {
    double lambda0_nm = 560.0;  // fluorescence center wavelength
    double gamma_h_cm = 50.0;   // homogeneous Lorentzian FWHM as a wavenumber
    int dipole_dof = 2;         // dipole degrees of freedom m, in {1,2,3}
    double tau0_ns = 1.0;       // vacuum lifetime

    // Wavenumber alpha = 2*pi/lambda0 in 1/um: x0 = alpha * a.
    double alpha_um() const;
    // Homogeneous width per radius in 1/um: Gamma_h in x-units = beta * a.
    double beta_um() const;
};

void validate_sphere(const SphereSpec& sphere);
void validate_emitter(const EmitterSpec& emitter);

enum class Regime { weak, intermediate, strong };
std::string to_string(Regime regime);

struct CouplingResult {
    Regime regime = Regime::weak;
    double margin = 0.0;  // L/R: reversible-exchange rate^2 over damping rate^2
};

struct DecayResult {
    double rate_vs_vacuum = 0.0;  // decay rate over the free-space rate
    double rate_vs_bulk = 0.0;    // rate_vs_vacuum / (n0 * xi_lc)
    Regime regime = Regime::weak;
    std::optional<qnm::QnmMode> dominant_mode;  // largest summand, if any
};

enum class Method { closed_form, mode_sum };
std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct CurveParams {
    EmitterSpec emitter;
    double n0 = 0.0;
    double xi_lc = 0.0;
    Method method = Method::closed_form;
    double fsr_x = 0.0;  // free spectral range used by the closed form
};

struct DecayCurve {
    std::vector<std::pair<double, double>> points;  // (radius_um, rate_vs_bulk)
    CurveParams params;
    std::vector<std::string> warnings;
};

// Surface density of states relative to vacuum: a sum of Lorentzians, one per
// mode, each broadened by its own width plus extra_width_x. extra_width_x = 0
// gives the bare cavity spectrum; extra_width_x = beta*a folds in the
// emitter's homogeneous width while preserving each peak's area.
double density_of_states(double x, const qnm::ModeTable& table, double extra_width_x);

// Weak-coupling decay rate of a broadened surface emitter from the full mode
// sum. Raises RegimeError when the resonant candidate is strongly coupled,
// RangeError when the table does not cover x0 = alpha*a plus a 5-fsr margin.
DecayResult decay_rate_general(const EmitterSpec& emitter, const SphereSpec& sphere,
                               const qnm::ModeTable& table, double xi_lc);

// Single-resonance-plus-background closed form for tangential dipoles (m=2);
// returns the rate normalized to the bulk-medium rate.
double decay_rate_closed_form(const EmitterSpec& emitter, const SphereSpec& sphere, double xi_lc,
                              double fsr_x);

// Real-cavity local-field factor (3n0^2/(2n0^2+1))^2.
double real_cavity_factor(double n0);

// Inverts the large-radius limit g = 3/(2 n0 xi) back to xi.
double extract_local_field_factor(double g, double n0);

// Compares the reversible-exchange rate against field-plus-emitter damping in
// inverse seconds; the factor-100 band around parity reads as intermediate.
CouplingResult classify_coupling(const EmitterSpec& emitter, const SphereSpec& sphere,
                                 const qnm::QnmMode& mode);

// Closed-form excited-state amplitude of the single-mode model
// C'' + ((gamma_h+gamma)/2) C' + (K gamma/(4 tau0)) C = 0, C(0)=1, C'(0)=0.
// All rates must share one inverse-time unit.
complexd single_mode_amplitude(double k_factor, double gamma, double gamma_h, double tau0,
                               double t);

// Weight left for the off-resonant background after one resonant mode
// saturates part of the density-of-states sum rule. May be negative.
double background_weight(double k_times_gamma, double fsr_x);

// Evaluates the selected method at each radius. For mode_sum a table is
// required; fsr_x feeds the closed form and the params snapshot.
DecayCurve build_decay_curve(const EmitterSpec& emitter, double n0,
                             const std::vector<double>& radii, double xi_lc, Method method,
                             const qnm::ModeTable* table, double fsr_x, unsigned threads = 0);

}  // namespace droplet::emission
