#pragma once

#include <complex>

#include "droplet/errors.hpp"

namespace droplet::specfun {

using complexd = std::complex<double>;

// Highest supported order for all functions in this header.
inline constexpr int kMaxOrder = 500;

// Value and first derivative of a Riccati-Bessel function at one point.
struct Riccati {
    complexd value;
    complexd derivative;
};

// Regular Riccati-Bessel function psi_l(z) = z * j_l(z).
//
// psi_0(z) = sin z exactly; higher orders by backward recurrence normalized
// against the exact order-0 or order-1 value, rescaling to avoid overflow.
// Throws DomainError for l < 0 or l > kMaxOrder, OverflowError when the
// result magnitude leaves the representable double range.
Riccati riccati_psi(int l, complexd z);

// Outgoing Riccati-Hankel function xi_l(z) = z * h1_l(z).
//
// Forward recurrence from the exact closed forms at orders 0 and 1, which is
// stable because xi is the dominant solution for growing order.
// Throws DomainError for l out of range or z == 0, OverflowError when the
// result magnitude leaves the representable double range.
Riccati riccati_xi(int l, complexd z);

// Unit-magnitude phase factor of psi_l(z), optionally with log10 of the true
// magnitude. Never overflows; used for contour phase tracking where only
// arg(psi) matters.
complexd riccati_psi_phase(int l, complexd z, double* log10_mag = nullptr);

// Unit-magnitude phase factor of xi_l(z), same contract as riccati_psi_phase.
complexd riccati_xi_phase(int l, complexd z, double* log10_mag = nullptr);

// Logarithmic derivative psi_l'(z) / psi_l(z) by backward ratio recurrence.
// Bounded evaluation: never overflows regardless of l or Im z.
complexd psi_log_derivative(int l, complexd z);

// Logarithmic derivative xi_l'(z) / xi_l(z) by forward ratio recurrence.
// Bounded evaluation: never overflows regardless of l or Im z.
complexd xi_log_derivative(int l, complexd z);

}  // namespace droplet::specfun
