#include "droplet/emission.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace droplet::emission {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpeedOfLightUmPerS = 2.99792458e14;

std::string fmt_num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Spectral sums run over the whole table; the coverage gate guarantees at
// least five free spectral ranges of modes beyond the evaluation point, so
// the only truncation error is the band edge, falling off as 1/dx^2.
struct Window {
    std::vector<const qnm::QnmMode*> modes;
    double fsr = 0.0;
};

Window select_window(const qnm::ModeTable& table, double x_center) {
    Window w;
    try {
        w.fsr = qnm::fsr_spacing(table, x_center);
    } catch (const RangeError&) {
        w.fsr = table.fsr_x;
    }
    if (!(w.fsr > 0.0))
        throw RangeError("mode table has no usable free spectral range around x=" +
                         fmt_num(x_center));
    if (x_center + 5.0 * w.fsr > table.x_max)
        throw RangeError("x=" + fmt_num(x_center) + " needs coverage to " +
                         fmt_num(x_center + 5.0 * w.fsr) + " but the table stops at " +
                         fmt_num(table.x_max));
    w.modes.reserve(table.modes.size());
    for (const auto& m : table.modes) w.modes.push_back(&m);
    return w;
}

void require_te(const qnm::ModeTable& table, const char* who) {
    if (table.pol != qnm::Polarization::TE)
        throw DomainError(std::string(who) +
                          " requires a TE table (the surface field is tangential)");
}

template <typename Fn>
auto with_radius_context(double radius, Fn&& fn) {
    // Re-throws the original error type with the offending radius prepended.
    try {
        return fn();
    } catch (const DomainError& e) {
        throw DomainError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const OverflowError& e) {
        throw OverflowError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const MissedRootError& e) {
        throw MissedRootError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const RangeError& e) {
        throw RangeError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const RegimeError& e) {
        throw RegimeError("radius a=" + fmt_num(radius) + " um: " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("radius a=" + fmt_num(radius) + " um: " + e.what());
    }
}

}  // namespace

double EmitterSpec::alpha_um() const {
    return 2000.0 * kPi / lambda0_nm;
}

double EmitterSpec::beta_um() const {
    return 2.0 * kPi * gamma_h_cm * 1e-4;
}

void validate_sphere(const SphereSpec& sphere) {
    if (!(sphere.n0 > 1.0) || !std::isfinite(sphere.n0))
        throw ValidationError("sphere n0 must exceed 1, got " + fmt_num(sphere.n0));
    if (!(sphere.radius_um > 0.0) || !(sphere.radius_um < 1e4))
        throw ValidationError("sphere radius_um must lie in (0, 1e4), got " +
                              fmt_num(sphere.radius_um));
}

void validate_emitter(const EmitterSpec& emitter) {
    if (!(emitter.lambda0_nm > 0.0) || !std::isfinite(emitter.lambda0_nm))
        throw ValidationError("emitter lambda0_nm must be positive, got " +
                              fmt_num(emitter.lambda0_nm));
    if (!(emitter.gamma_h_cm >= 0.0) || !std::isfinite(emitter.gamma_h_cm))
        throw ValidationError("emitter gamma_h_cm must be non-negative, got " +
                              fmt_num(emitter.gamma_h_cm));
    if (emitter.dipole_dof < 1 || emitter.dipole_dof > 3)
        throw ValidationError("emitter dipole_dof must be 1, 2 or 3, got " +
                              std::to_string(emitter.dipole_dof));
    if (!(emitter.tau0_ns > 0.0) || !std::isfinite(emitter.tau0_ns))
        throw ValidationError("emitter tau0_ns must be positive, got " + fmt_num(emitter.tau0_ns));
}

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::weak: return "weak";
        case Regime::intermediate: return "intermediate";
        default: return "strong";
    }
}

std::string to_string(Method method) {
    return method == Method::closed_form ? "closed_form" : "mode_sum";
}

Method method_from_string(const std::string& text) {
    if (text == "closed_form" || text == "closed-form") return Method::closed_form;
    if (text == "mode_sum" || text == "mode-sum") return Method::mode_sum;
    throw ParseError("unknown method '" + text + "' (expected closed_form or mode_sum)");
}

double density_of_states(double x, const qnm::ModeTable& table, double extra_width_x) {
    require_te(table, "density_of_states");
    if (!(extra_width_x >= 0.0))
        throw DomainError("extra_width_x must be non-negative, got " + fmt_num(extra_width_x));
    Window w = select_window(table, x);
    double n0 = table.n0;
    double sum = 0.0;
    for (const qnm::QnmMode* m : w.modes) {
        double k0 = (2.0 * m->l + 1.0) / ((n0 * n0 - 1.0) * m->re_x * m->re_x);
        double g = m->width_x + extra_width_x;
        double d = x - m->re_x;
        sum += k0 * (1.0 / g) * (0.25 * g * g) / (d * d + 0.25 * g * g);
    }
    return sum;
}

DecayResult decay_rate_general(const EmitterSpec& emitter, const SphereSpec& sphere,
                               const qnm::ModeTable& table, double xi_lc) {
    validate_emitter(emitter);
    validate_sphere(sphere);
    require_te(table, "decay_rate_general");
    if (!(xi_lc > 0.0)) throw DomainError("xi_lc must be positive, got " + fmt_num(xi_lc));
    if (std::abs(table.n0 - sphere.n0) > 1e-9)
        throw ValidationError("mode table was solved for n0=" + fmt_num(table.n0) +
                              ", sphere has n0=" + fmt_num(sphere.n0));

    const double x0 = emitter.alpha_um() * sphere.radius_um;
    const double gamma_h_x = emitter.beta_um() * sphere.radius_um;
    Window w = select_window(table, x0);

    DecayResult out;
    // Regime gate on the resonant candidate: the nearest least-leaky mode.
    const qnm::QnmMode* candidate = nullptr;
    try {
        candidate = &qnm::least_leaky_mode(table, x0);
    } catch (const RangeError&) {
        for (const qnm::QnmMode* m : w.modes)
            if (!candidate || m->width_x < candidate->width_x) candidate = m;
    }
    if (candidate) {
        CouplingResult coupling = classify_coupling(emitter, sphere, *candidate);
        out.regime = coupling.regime;
        if (coupling.regime == Regime::strong)
            throw RegimeError("strong emitter-mode coupling at a=" + fmt_num(sphere.radius_um) +
                              " um (margin " + fmt_num(coupling.margin) +
                              "): the rate formula assumes irreversible decay");
    }

    double sum = 0.0;
    double best = -1.0;
    for (const qnm::QnmMode* m : w.modes) {
        double g_eff = gamma_h_x + m->width_x;
        double d = 2.0 * (x0 - m->re_x);
        double term = m->k_factor * m->width_x * g_eff / (d * d + g_eff * g_eff);
        sum += term;
        if (term > best) {
            best = term;
            out.dominant_mode = *m;
        }
    }
    out.rate_vs_vacuum = (3.0 / emitter.dipole_dof) * sum;
    out.rate_vs_bulk = out.rate_vs_vacuum / (sphere.n0 * xi_lc);
    return out;
}

double decay_rate_closed_form(const EmitterSpec& emitter, const SphereSpec& sphere, double xi_lc,
                              double fsr_x) {
    validate_emitter(emitter);
    validate_sphere(sphere);
    if (emitter.dipole_dof != 2)
        throw DomainError("closed form holds for tangential surface dipoles only (m=2), got m=" +
                          std::to_string(emitter.dipole_dof));
    double beta = emitter.beta_um();
    if (!(beta > 0.0))
        throw DomainError(
            "closed form is singular at zero homogeneous width; use the mode sum instead");
    if (!(fsr_x > 0.0)) throw DomainError("fsr_x must be positive, got " + fmt_num(fsr_x));
    if (!(xi_lc > 0.0)) throw DomainError("xi_lc must be positive, got " + fmt_num(xi_lc));
    double n0 = sphere.n0;
    double a = sphere.radius_um;
    double alpha = emitter.alpha_um();
    double bracket = 1.0 + (2.0 * n0 / (n0 * n0 - 1.0)) * (1.0 / alpha) *
                               (1.0 / (beta * a * a) - 0.5 * kPi / (fsr_x * a));
    return (1.0 / (n0 * xi_lc)) * 1.5 * bracket;
}

double real_cavity_factor(double n0) {
    if (!(n0 >= 1.0)) throw DomainError("real_cavity_factor requires n0 >= 1, got " + fmt_num(n0));
    double f = 3.0 * n0 * n0 / (2.0 * n0 * n0 + 1.0);
    return f * f;
}

double extract_local_field_factor(double g, double n0) {
    if (!(g > 0.0)) throw DomainError("asymptotic rate g must be positive, got " + fmt_num(g));
    if (!(n0 > 1.0)) throw DomainError("extract_local_field_factor requires n0 > 1, got " +
                                       fmt_num(n0));
    return 3.0 / (2.0 * n0 * g);
}

CouplingResult classify_coupling(const EmitterSpec& emitter, const SphereSpec& sphere,
                                 const qnm::QnmMode& mode) {
    validate_emitter(emitter);
    validate_sphere(sphere);
    // Convert x-space rates to inverse seconds: one x-unit is c/a per second.
    double conv = kSpeedOfLightUmPerS / sphere.radius_um;
    double gamma_s = mode.width_x * conv;
    double gamma_h_s = emitter.beta_um() * sphere.radius_um * conv;
    double tau0_s = emitter.tau0_ns * 1e-9;
    double exchange = mode.k_factor * gamma_s / tau0_s;   // (2 Omega_Rabi)^2 scale
    double damping = 0.25 * (gamma_h_s + gamma_s) * (gamma_h_s + gamma_s);
    CouplingResult out;
    out.margin = damping > 0.0 ? exchange / damping : std::numeric_limits<double>::infinity();
    if (out.margin > 100.0)
        out.regime = Regime::strong;
    else if (out.margin < 0.01)
        out.regime = Regime::weak;
    else
        out.regime = Regime::intermediate;
    return out;
}

complexd single_mode_amplitude(double k_factor, double gamma, double gamma_h, double tau0,
                               double t) {
    if (!(tau0 > 0.0)) throw DomainError("tau0 must be positive, got " + fmt_num(tau0));
    double b = 0.5 * (gamma_h + gamma);
    double q = k_factor * gamma / (4.0 * tau0);
    complexd disc = std::sqrt(complexd(b * b - 4.0 * q, 0.0));
    complexd lp = 0.5 * (-b + disc);
    complexd lm = 0.5 * (-b - disc);
    double scale = std::abs(b) + std::sqrt(std::abs(q)) + 1e-300;
    if (std::abs(disc) <= 1e-9 * scale) {
        complexd lam(-0.5 * b, 0.0);
        return (1.0 - lam * t) * std::exp(lam * t);
    }
    return (lp * std::exp(lm * t) - lm * std::exp(lp * t)) / (lp - lm);
}

double background_weight(double k_times_gamma, double fsr_x) {
    if (!(fsr_x > 0.0)) throw DomainError("fsr_x must be positive, got " + fmt_num(fsr_x));
    return 1.0 - 0.5 * kPi * k_times_gamma / fsr_x;
}

DecayCurve build_decay_curve(const EmitterSpec& emitter, double n0,
                             const std::vector<double>& radii, double xi_lc, Method method,
                             const qnm::ModeTable* table, double fsr_x, unsigned threads) {
    validate_emitter(emitter);
    if (!(n0 > 1.0)) throw ValidationError("n0 must exceed 1, got " + fmt_num(n0));
    if (!(xi_lc > 0.0)) throw ValidationError("xi_lc must be positive, got " + fmt_num(xi_lc));
    if (!(fsr_x > 0.0)) throw ValidationError("fsr_x must be positive, got " + fmt_num(fsr_x));
    if (method == Method::mode_sum && table == nullptr)
        throw ValidationError("mode_sum curves require a mode table");
    for (size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1]))
            throw ValidationError("radii must be strictly increasing (index " +
                                  std::to_string(i + 1) + ")");

    DecayCurve curve;
    curve.params = CurveParams{emitter, n0, xi_lc, method, fsr_x};
    curve.points.resize(radii.size());
    std::vector<std::string> point_warnings(radii.size());
    std::vector<std::exception_ptr> errors(radii.size());

    auto eval_point = [&](size_t i) {
        double a = radii[i];
        double rate = with_radius_context(a, [&]() {
            SphereSpec sphere{n0, a};
            if (method == Method::closed_form)
                return decay_rate_closed_form(emitter, sphere, xi_lc, fsr_x);
            return decay_rate_general(emitter, sphere, *table, xi_lc).rate_vs_bulk;
        });
        curve.points[i] = {a, rate};
        // The background weight estimate flags radii where the single-mode
        // sum-rule split behind the closed form stops being meaningful.
        double x0 = emitter.alpha_um() * a;
        double k_gamma_est = 2.0 * n0 / ((n0 * n0 - 1.0) * x0);
        double gb = background_weight(k_gamma_est, fsr_x);
        if (gb < 0.0)
            point_warnings[i] = "a=" + fmt_num(a) + " um: background weight " + fmt_num(gb) +
                                " is negative; the resonant mode overfills the sum rule and the "
                                "closed form loses validity";
    };

    unsigned nt = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, std::max<size_t>(radii.size(), 1));
    if (nt <= 1) {
        for (size_t i = 0; i < radii.size(); ++i) eval_point(i);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (size_t i = next.fetch_add(1); i < radii.size(); i = next.fetch_add(1)) {
                try {
                    eval_point(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (auto& wmsg : point_warnings)
        if (!wmsg.empty()) curve.warnings.push_back(wmsg);
    for (const auto& p : curve.points)
        if (!radii.empty() && (!std::isfinite(p.second) || !(p.second > 0.0)))
            throw ValidationError("curve point at a=" + fmt_num(p.first) +
                                  " um is not finite and positive");
    return curve;
}

}  // namespace droplet::emission
