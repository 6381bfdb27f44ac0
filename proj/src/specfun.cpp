#include "droplet/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace droplet::specfun {
namespace {

constexpr double kRescaleTrigger = 1e250;
constexpr double kRescaleFactor = 1e-250;
constexpr double kLog10Rescale = 250.0;
constexpr double kTinyDenominator = 1e-280;
// exp(|Im z|) factors overflow double just past 709.
constexpr double kMaxAbsImag = 690.0;

const complexd kImagUnit(0.0, 1.0);

void check_order(int l) {
    if (l < 0 || l > kMaxOrder)
        throw DomainError("riccati order l=" + std::to_string(l) + " outside supported range [0, " +
                          std::to_string(kMaxOrder) + "]");
}

void check_exp_range(complexd z) {
    if (std::abs(z.imag()) > kMaxAbsImag)
        throw OverflowError("riccati functions overflow double range for |Im z| > 690");
}

double max_component(complexd v) {
    return std::max(std::abs(v.real()), std::abs(v.imag()));
}

// First order safely above both the target order and the turning point, with a
// margin that damps the arbitrary backward-recurrence seed below 1e-16.
int start_order(int l, double abs_z) {
    double high = std::max(static_cast<double>(l), abs_z);
    return std::max(l, static_cast<int>(abs_z) + 1) + 16 +
           static_cast<int>(std::ceil(5.0 * std::sqrt(high)));
}

// Backward sweep trial values share one unknown normalization. Each stored
// value carries the rescale count at its store time; the unscaled trial is
// t * 10^(250 * s).
struct PsiSweep {
    complexd t_l, t_lm1, t_1, t_0;
    int s_l = 0, s_lm1 = 0, s_1 = 0, s_0 = 0;
};

PsiSweep psi_sweep(int l, complexd z) {
    const int n_start = start_order(l, std::abs(z));
    PsiSweep out;
    complexd upper = 0.0;    // trial psi_{n+1}
    complexd cur = 1e-280;   // trial psi_n
    int shifts = 0;
    auto record = [&](int idx, complexd v) {
        if (idx == l) {
            out.t_l = v;
            out.s_l = shifts;
        }
        if (idx == l - 1) {
            out.t_lm1 = v;
            out.s_lm1 = shifts;
        }
        if (idx == 1) {
            out.t_1 = v;
            out.s_1 = shifts;
        }
        if (idx == 0) {
            out.t_0 = v;
            out.s_0 = shifts;
        }
    };
    record(n_start, cur);
    for (int n = n_start; n >= 1; --n) {
        complexd lower = (static_cast<double>(2 * n + 1) / z) * cur - upper;
        upper = cur;
        cur = lower;
        if (max_component(cur) > kRescaleTrigger) {
            cur *= kRescaleFactor;
            upper *= kRescaleFactor;
            ++shifts;
        }
        record(n - 1, cur);
    }
    return out;
}

// log10 of the unscaled trial magnitude; -inf for an exact zero.
double unscaled_log10(complexd t, int s) {
    double m = std::abs(t);
    if (m == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log10(m) + kLog10Rescale * s;
}

struct Assembled {
    complexd unit;  // unit-magnitude phase factor
    double e10;     // log10 of the true magnitude
};

Assembled assemble_scaled(complexd t_idx, int s_idx, complexd t_ref, int s_ref,
                          complexd exact_ref) {
    double m_idx = std::abs(t_idx);
    if (m_idx == 0.0) return {complexd(1.0, 0.0), -400.0};
    double m_ref = std::abs(t_ref);
    double m_exact = std::abs(exact_ref);
    double e10 = std::log10(m_idx) - std::log10(m_ref) +
                 kLog10Rescale * static_cast<double>(s_idx - s_ref) + std::log10(m_exact);
    complexd unit = (t_idx / m_idx) * (m_ref / t_ref) * (exact_ref / m_exact);
    return {unit, e10};
}

complexd realize(const Assembled& a, const char* name) {
    if (a.e10 > 307.5) throw OverflowError(std::string(name) + " overflows double range");
    if (a.e10 < -307.0) {
        if (a.e10 <= -399.0) return 0.0;  // exact zero sentinel
        throw OverflowError(std::string(name) + " underflows double range");
    }
    return a.unit * std::pow(10.0, a.e10);
}

// Shared tail of riccati_psi / riccati_psi_phase: sweep plus reference choice.
struct PsiParts {
    Assembled at_l;
    Assembled at_lm1;
};

PsiParts psi_parts(int l, complexd z) {
    const complexd psi0 = std::sin(z);
    const complexd psi1 = psi0 / z - std::cos(z);
    PsiSweep sw = psi_sweep(l, z);
    // Normalize against whichever anchor the sweep reached with the larger
    // unscaled magnitude, so a near-zero of sin never poisons the ratio.
    double len0 = unscaled_log10(sw.t_0, sw.s_0);
    double len1 = unscaled_log10(sw.t_1, sw.s_1);
    complexd t_ref = sw.t_0;
    int s_ref = sw.s_0;
    complexd exact = psi0;
    if (len1 > len0) {
        t_ref = sw.t_1;
        s_ref = sw.s_1;
        exact = psi1;
    }
    return {assemble_scaled(sw.t_l, sw.s_l, t_ref, s_ref, exact),
            assemble_scaled(sw.t_lm1, sw.s_lm1, t_ref, s_ref, exact)};
}

struct XiSweep {
    complexd xi_l, xi_lm1;
    int shifts = 0;
};

// Forward recurrence from the exact order-0/1 seeds; requires l >= 1.
XiSweep xi_sweep(int l, complexd z) {
    XiSweep out;
    complexd eiz = std::exp(kImagUnit * z);
    complexd prev = -kImagUnit * eiz;             // xi_0
    complexd cur = -eiz * (1.0 + kImagUnit / z);  // xi_1
    if (max_component(prev) > kRescaleTrigger || max_component(cur) > kRescaleTrigger) {
        prev *= kRescaleFactor;
        cur *= kRescaleFactor;
        ++out.shifts;
    }
    for (int n = 1; n < l; ++n) {
        complexd next = (static_cast<double>(2 * n + 1) / z) * cur - prev;
        prev = cur;
        cur = next;
        if (max_component(cur) > kRescaleTrigger) {
            cur *= kRescaleFactor;
            prev *= kRescaleFactor;
            ++out.shifts;
        }
    }
    out.xi_l = cur;
    out.xi_lm1 = prev;
    return out;
}

}  // namespace

Riccati riccati_psi(int l, complexd z) {
    check_order(l);
    check_exp_range(z);
    if (z == complexd(0.0, 0.0)) {
        // psi_l ~ z^{l+1}/(2l+1)!!: value and slope both vanish for l >= 1.
        if (l == 0) return {complexd(0.0), complexd(1.0)};
        return {complexd(0.0), complexd(0.0)};
    }
    const complexd psi0 = std::sin(z);
    const complexd dpsi0 = std::cos(z);
    if (l == 0) return {psi0, dpsi0};
    PsiParts parts = psi_parts(l, z);
    complexd value = realize(parts.at_l, "riccati_psi");
    complexd below = realize(parts.at_lm1, "riccati_psi");
    return {value, below - (static_cast<double>(l) / z) * value};
}

Riccati riccati_xi(int l, complexd z) {
    check_order(l);
    check_exp_range(z);
    if (z == complexd(0.0, 0.0)) throw DomainError("riccati_xi is singular at z = 0");
    if (l == 0) {
        complexd eiz = std::exp(kImagUnit * z);
        return {-kImagUnit * eiz, eiz};
    }
    XiSweep sw = xi_sweep(l, z);
    if (sw.shifts > 0) {
        double m = std::abs(sw.xi_l);
        double e10 = (m == 0.0 ? -400.0 : std::log10(m)) + kLog10Rescale * sw.shifts;
        if (e10 > 307.5)
            throw OverflowError("riccati_xi overflows double range at order " + std::to_string(l));
        double scale = std::pow(10.0, kLog10Rescale * sw.shifts);
        sw.xi_l *= scale;
        sw.xi_lm1 *= scale;
    }
    return {sw.xi_l, sw.xi_lm1 - (static_cast<double>(l) / z) * sw.xi_l};
}

complexd riccati_psi_phase(int l, complexd z, double* log10_mag) {
    check_order(l);
    check_exp_range(z);
    if (l == 0) {
        complexd v = std::sin(z);
        double m = std::abs(v);
        if (m == 0.0) {
            if (log10_mag) *log10_mag = -400.0;
            return complexd(1.0, 0.0);
        }
        if (log10_mag) *log10_mag = std::log10(m);
        return v / m;
    }
    PsiParts parts = psi_parts(l, z);
    if (log10_mag) *log10_mag = parts.at_l.e10;
    return parts.at_l.unit;
}

complexd riccati_xi_phase(int l, complexd z, double* log10_mag) {
    check_order(l);
    check_exp_range(z);
    if (z == complexd(0.0, 0.0)) throw DomainError("riccati_xi is singular at z = 0");
    if (l == 0) {
        complexd v = -kImagUnit * std::exp(kImagUnit * z);
        double m = std::abs(v);
        if (log10_mag) *log10_mag = std::log10(m);
        return v / m;
    }
    XiSweep sw = xi_sweep(l, z);
    double m = std::abs(sw.xi_l);
    if (m == 0.0) {
        if (log10_mag) *log10_mag = -400.0;
        return complexd(1.0, 0.0);
    }
    if (log10_mag) *log10_mag = std::log10(m) + kLog10Rescale * sw.shifts;
    return sw.xi_l / m;
}

complexd psi_log_derivative(int l, complexd z) {
    check_order(l);
    if (z == complexd(0.0, 0.0)) throw DomainError("psi log-derivative has a pole at z = 0");
    if (l == 0) return std::cos(z) / std::sin(z);
    const int n_start = start_order(l, std::abs(z));
    complexd d = 0.0;  // limit of psi_n'/psi_n as n -> inf
    for (int n = n_start; n > l; --n) {
        complexd an = static_cast<double>(n) / z;
        complexd den = d + an;
        if (std::abs(den) < kTinyDenominator) den = kTinyDenominator;
        d = an - 1.0 / den;
    }
    return d;
}

complexd xi_log_derivative(int l, complexd z) {
    check_order(l);
    if (z == complexd(0.0, 0.0)) throw DomainError("xi log-derivative has a pole at z = 0");
    if (l == 0) return kImagUnit;
    complexd r = -kImagUnit + 1.0 / z;  // xi_1 / xi_0
    for (int n = 1; n < l; ++n) {
        if (std::abs(r) < kTinyDenominator) r = kTinyDenominator;
        r = static_cast<double>(2 * n + 1) / z - 1.0 / r;
    }
    if (std::abs(r) < kTinyDenominator) r = kTinyDenominator;
    return 1.0 / r - static_cast<double>(l) / z;
}

}  // namespace droplet::specfun
