#include "droplet/qnm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "droplet/specfun.hpp"

namespace droplet::qnm {
namespace {

namespace sf = droplet::specfun;

constexpr double kPi = std::numbers::pi;
constexpr double kResidualTol = 1e-10;
constexpr double kStepTol = 1e-12;
constexpr double kDedupTol = 1e-8;

void check_index(double n0) {
    if (!std::isfinite(n0) || !(n0 > 1.0)) {
        std::ostringstream os;
        os << "refractive index must exceed 1, got n0=" << n0;
        throw DomainError(os.str());
    }
}

void check_order_range(int l) {
    if (l < 0 || l > sf::kMaxOrder)
        throw DomainError("order l=" + std::to_string(l) + " outside supported range [0, " +
                          std::to_string(sf::kMaxOrder) + "]");
}

std::string fmt_z(complexd z) {
    std::ostringstream os;
    os << "(" << z.real() << ", " << z.imag() << ")";
    return os.str();
}

bool finite(complexd v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

// Raw characteristic value without the pole check; contour walks tolerate
// huge-but-finite values near poles.
complexd char_value_raw(Polarization pol, int l, double n0, complexd x) {
    complexd dpsi = sf::psi_log_derivative(l, n0 * x);
    complexd dxi = sf::xi_log_derivative(l, x);
    return pol == Polarization::TE ? n0 * dpsi - dxi : dpsi / n0 - dxi;
}

struct Box {
    double re_lo, re_hi, im_lo, im_hi;
    bool contains(complexd z) const {
        return z.real() > re_lo && z.real() < re_hi && z.imag() > im_lo && z.imag() < im_hi;
    }
};

struct RefinedRoot {
    complexd z;
    double residual = 0.0;
    bool ok = false;
};

// Damped Newton iteration on the characteristic function. The derivative is
// closed-form, so convergence near a simple root is quadratic; the box keeps
// stray seeds from wandering into foreign bands.
RefinedRoot refine_root(Polarization pol, int l, double n0, complexd z0, const Box& box) {
    complexd z = z0;
    complexd f;
    try {
        f = char_value_raw(pol, l, n0, z);
    } catch (const DomainError&) {
        return {};
    }
    if (!finite(f)) return {};
    for (int iter = 0; iter < 80; ++iter) {
        complexd df = characteristic_derivative(pol, l, n0, z);
        if (!finite(df) || std::abs(df) == 0.0) return {};
        complexd step = -f / df;
        if (std::abs(f) < kResidualTol && std::abs(step) < kStepTol * std::max(1.0, std::abs(z)))
            return {z, std::abs(f), true};
        bool moved = false;
        complexd zn, fn;
        for (int halving = 0; halving < 10; ++halving) {
            zn = z + step;
            if (!box.contains(zn)) {
                step *= 0.5;
                continue;
            }
            try {
                fn = char_value_raw(pol, l, n0, zn);
            } catch (const DomainError&) {
                step *= 0.5;
                continue;
            }
            if (!finite(fn)) {
                step *= 0.5;
                continue;
            }
            if (std::abs(fn) <= std::abs(f) ||
                std::abs(step) < kStepTol * std::max(1.0, std::abs(z))) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) return {z, std::abs(f), std::abs(f) < kResidualTol};
        z = zn;
        f = fn;
    }
    return {z, std::abs(f), false};
}

// Phase of the deflated entire matching determinant W = psi(u) xi(x) F(x),
// computed as a product of unit factors so magnitude can never overflow.
complexd deflated_phase_value(Polarization pol, int l, double n0, complexd z,
                              const std::vector<complexd>& deflate) {
    complexd g = sf::riccati_psi_phase(l, n0 * z) * sf::riccati_xi_phase(l, z) *
                 char_value_raw(pol, l, n0, z);
    for (complexd r : deflate) {
        complexd d = z - r;
        double m = std::abs(d);
        if (m > 0.0) g *= std::conj(d) / m;
    }
    return g;
}

double phase_step(const std::function<complexd(complexd)>& g, complexd za, complexd ga,
                  complexd zb, complexd gb, int depth) {
    double d = std::arg(gb / ga);
    if (std::isfinite(d) && std::abs(d) <= 0.9) return d;
    if (depth >= 42)
        throw ConvergenceError("contour phase unresolvable near x=" + fmt_z(za) +
                               " (root too close to the certification boundary)");
    complexd zm = 0.5 * (za + zb);
    complexd gm = g(zm);
    return phase_step(g, za, ga, zm, gm, depth + 1) + phase_step(g, zm, gm, zb, gb, depth + 1);
}

double edge_phase(const std::function<complexd(complexd)>& g, complexd a, complexd b) {
    // Initial spacing below the distance to any off-contour singularity, so a
    // full phase turn can never hide between samples.
    const double h0 = 0.02;
    int n = std::max(4, static_cast<int>(std::ceil(std::abs(b - a) / h0)));
    double sum = 0.0;
    complexd za = a;
    complexd ga = g(a);
    for (int i = 1; i <= n; ++i) {
        complexd zb = a + (b - a) * (static_cast<double>(i) / n);
        complexd gb = g(zb);
        sum += phase_step(g, za, ga, zb, gb, 0);
        za = zb;
        ga = gb;
    }
    return sum;
}

int winding_deflated(Polarization pol, int l, double n0, const Box& rect,
                     const std::vector<complexd>& deflate) {
    auto g = [&](complexd z) { return deflated_phase_value(pol, l, n0, z, deflate); };
    complexd c0(rect.re_lo, rect.im_lo), c1(rect.re_hi, rect.im_lo);
    complexd c2(rect.re_hi, rect.im_hi), c3(rect.re_lo, rect.im_hi);
    double total = edge_phase(g, c0, c1) + edge_phase(g, c1, c2) + edge_phase(g, c2, c3) +
                   edge_phase(g, c3, c0);
    double turns = total / (2.0 * kPi);
    long w = std::lround(turns);
    if (std::abs(turns - static_cast<double>(w)) > 0.15)
        throw ConvergenceError("winding phase did not close to an integer for l=" +
                               std::to_string(l) + " (got " + std::to_string(turns) + " turns)");
    return static_cast<int>(w);
}

struct Candidate {
    complexd z;
    double residual;
};

void add_candidate(std::vector<Candidate>& roots, complexd z, double residual) {
    for (auto& r : roots) {
        if (std::abs(r.z - z) < kDedupTol) {
            if (residual < r.residual) r = {z, residual};
            return;
        }
    }
    roots.push_back({z, residual});
}

// Recursive winding-guided search for roots the scan missed. Splits the cell
// until it is small, then polishes from its center.
void recover_missing(Polarization pol, int l, double n0, const Box& cell, const Box& newton_box,
                     std::vector<Candidate>& roots, int depth) {
    std::vector<complexd> deflate;
    deflate.reserve(roots.size());
    for (const auto& r : roots) deflate.push_back(r.z);
    int w = winding_deflated(pol, l, n0, cell, deflate);
    if (w <= 0) return;
    if ((cell.re_hi - cell.re_lo < 0.3 && cell.im_hi - cell.im_lo < 0.3) || depth >= 9) {
        complexd center(0.5 * (cell.re_lo + cell.re_hi), 0.5 * (cell.im_lo + cell.im_hi));
        RefinedRoot rr = refine_root(pol, l, n0, center, newton_box);
        if (!rr.ok)
            throw ConvergenceError("root refinement failed from seed x=" + fmt_z(center) +
                                   " for l=" + std::to_string(l));
        add_candidate(roots, rr.z, rr.residual);
        return;
    }
    double rm = 0.5 * (cell.re_lo + cell.re_hi);
    double im = 0.5 * (cell.im_lo + cell.im_hi);
    recover_missing(pol, l, n0, {cell.re_lo, rm, cell.im_lo, im}, newton_box, roots, depth + 1);
    recover_missing(pol, l, n0, {rm, cell.re_hi, cell.im_lo, im}, newton_box, roots, depth + 1);
    recover_missing(pol, l, n0, {cell.re_lo, rm, im, cell.im_hi}, newton_box, roots, depth + 1);
    recover_missing(pol, l, n0, {rm, cell.re_hi, im, cell.im_hi}, newton_box, roots, depth + 1);
}

double tangential_weight(int l, double n0, complexd x) {
    // Fraction of the surface intensity carried by the tangential components;
    // scales the TE-form enhancement for TM modes.
    complexd dpsi = sf::psi_log_derivative(l, n0 * x);
    complexd t = dpsi * dpsi;
    complexd denom = t + static_cast<double>(l) * (l + 1.0) / (x * x);
    double dm = std::abs(denom);
    if (dm == 0.0) return 1.0;
    return std::abs(t) / dm;
}

}  // namespace

std::string to_string(Polarization pol) {
    return pol == Polarization::TE ? "TE" : "TM";
}

Polarization polarization_from_string(const std::string& text) {
    if (text == "TE" || text == "te") return Polarization::TE;
    if (text == "TM" || text == "tm") return Polarization::TM;
    throw ParseError("unknown polarization '" + text + "' (expected TE or TM)");
}

complexd characteristic_value(Polarization pol, int l, double n0, complexd x) {
    check_index(n0);
    check_order_range(l);
    if (x == complexd(0.0, 0.0))
        throw DomainError("characteristic function undefined at x = 0");
    complexd f = char_value_raw(pol, l, n0, x);
    if (!finite(f))
        throw DomainError("characteristic function pole at x=" + fmt_z(x));
    return f;
}

complexd characteristic_derivative(Polarization pol, int l, double n0, complexd x) {
    check_index(n0);
    check_order_range(l);
    if (x == complexd(0.0, 0.0))
        throw DomainError("characteristic function undefined at x = 0");
    complexd u = n0 * x;
    complexd dpsi = sf::psi_log_derivative(l, u);
    complexd dxi = sf::xi_log_derivative(l, x);
    double ll1 = static_cast<double>(l) * (l + 1.0);
    // Both log-derivatives obey D' = l(l+1)/z^2 - 1 - D^2.
    complexd dpsi_du = ll1 / (u * u) - 1.0 - dpsi * dpsi;
    complexd dxi_dx = ll1 / (x * x) - 1.0 - dxi * dxi;
    return pol == Polarization::TE ? n0 * n0 * dpsi_du - dxi_dx : dpsi_du - dxi_dx;
}

double asymptotic_width(double n0) {
    check_index(n0);
    return std::log((n0 + 1.0) / (n0 - 1.0)) / n0;
}

int count_roots(Polarization pol, int l, double n0, complexd lo, complexd hi,
                const std::vector<complexd>& deflate) {
    check_index(n0);
    check_order_range(l);
    if (!(lo.real() < hi.real()) || !(lo.imag() < hi.imag()))
        throw DomainError("count_roots rectangle is empty");
    Box rect{lo.real(), hi.real(), lo.imag(), hi.imag()};
    int w = winding_deflated(pol, l, n0, rect, deflate);
    int inside = 0;
    for (complexd r : deflate)
        if (rect.contains(r)) ++inside;
    return w + inside;
}

std::vector<QnmMode> find_modes(Polarization pol, int l, double n0, double x_max,
                                double max_width) {
    check_index(n0);
    check_order_range(l);
    if (!(x_max > 0.0) || !std::isfinite(x_max))
        throw DomainError("x_max must be positive and finite");
    if (!(max_width > 0.0)) throw DomainError("max_width must be positive");

    const double w_inf = asymptotic_width(n0);
    const double nu = l + 0.5;
    const double cbrt_nu = std::cbrt(nu);
    // No root can sit below this line (the first root obeys the Airy-edge
    // asymptotics with a positive offset); used to prune empty bands.
    const double hard_floor = (nu - 2.5 * cbrt_nu - 2.5) / n0;
    if (hard_floor > x_max + 0.5) return {};

    double scan_lo = std::max(0.04, (nu - 3.0 * cbrt_nu - 3.0) / n0);
    double scan_hi = x_max + 0.45;
    if (scan_lo > scan_hi - 0.5) scan_lo = std::max(0.04, scan_hi - 1.0);

    const double scan_im = -0.25 * w_inf;
    const Box newton_box{std::max(0.01, scan_lo - 1.0), scan_hi + 1.0, -(0.5 * w_inf + 0.2), 0.2};

    // Seed pass: real-part sign changes and |F| dips along a line a quarter
    // width below the axis, where every root pulls F through a sign flip.
    std::vector<complexd> seeds;
    {
        struct Sample {
            double re, abs, sign;
        };
        const double step = 0.05;
        int npts = static_cast<int>(std::ceil((scan_hi - scan_lo) / step)) + 1;
        std::vector<Sample> recent;  // sliding window of the last three samples
        for (int i = 0; i <= npts; ++i) {
            double re = std::min(scan_lo + i * step, scan_hi);
            complexd f;
            try {
                f = char_value_raw(pol, l, n0, complexd(re, scan_im));
            } catch (const DomainError&) {
                continue;
            }
            if (!finite(f)) continue;
            Sample s{re, std::abs(f), f.real() > 0.0 ? 1.0 : -1.0};
            if (!recent.empty()) {
                const Sample& p = recent.back();
                if (s.sign != p.sign && std::min(s.abs, p.abs) < 4.0)
                    seeds.push_back(complexd(0.5 * (p.re + s.re), scan_im));
                if (recent.size() >= 2) {
                    const Sample& pp = recent[recent.size() - 2];
                    if (p.abs < pp.abs && p.abs < s.abs && p.abs < 1.0)
                        seeds.push_back(complexd(p.re, scan_im));
                }
            }
            recent.push_back(s);
            if (recent.size() > 3) recent.erase(recent.begin());
            if (re >= scan_hi) break;
        }
    }

    std::vector<Candidate> roots;
    for (complexd seed : seeds) {
        RefinedRoot rr = refine_root(pol, l, n0, seed, newton_box);
        if (!rr.ok) {
            // Retry from a deeper and a shallower start before giving up on
            // this speculative seed; certification recovers real misses.
            rr = refine_root(pol, l, n0, complexd(seed.real(), -0.45 * w_inf), newton_box);
        }
        if (!rr.ok) continue;
        if (rr.z.imag() >= 0.0 || rr.z.real() <= 0.0) continue;
        add_candidate(roots, rr.z, rr.residual);
    }

    // Certification rectangle: strictly contains every admissible root (the
    // top edge sits above the axis, the bottom below the asymptotic depth).
    Box rect{std::max(0.035, scan_lo - 0.02), x_max + 0.35, -(0.5 * w_inf + 0.06), 0.045};
    auto near_vertical_edge = [&](double edge) {
        for (const auto& r : roots)
            if (std::abs(r.z.real() - edge) < 0.02) return true;
        return false;
    };
    for (int tries = 0; tries < 5 && near_vertical_edge(rect.re_hi); ++tries) rect.re_hi += 0.043;

    std::vector<complexd> deflate;
    for (int pass = 0; pass < 3; ++pass) {
        deflate.clear();
        for (const auto& r : roots) deflate.push_back(r.z);
        int wind = winding_deflated(pol, l, n0, rect, deflate);
        if (wind == 0) break;
        if (wind < 0) {
            throw MissedRootError("certification counted " + std::to_string(wind) +
                                  " net roots after deflation for l=" + std::to_string(l) +
                                  " (duplicate or spurious root in the candidate list)");
        }
        if (pass == 2)
            throw MissedRootError("winding reports " + std::to_string(wind) +
                                  " unfound roots for l=" + std::to_string(l) + " in [" +
                                  std::to_string(rect.re_lo) + ", " + std::to_string(rect.re_hi) +
                                  "]");
        recover_missing(pol, l, n0, rect, newton_box, roots, 0);
    }

    std::sort(roots.begin(), roots.end(),
              [](const Candidate& a, const Candidate& b) { return a.z.real() < b.z.real(); });

    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<QnmMode> out;
    int j = 0;
    for (const auto& r : roots) {
        if (r.z.real() > x_max) break;
        ++j;
        // Imaginary parts below the double resolution of the root position are
        // reported at the noise floor: an upper bound on the true leakage.
        double im_floor = 16.0 * eps * std::max(1.0, r.z.real());
        double im = std::min(r.z.imag(), -im_floor);
        double width = -2.0 * im;
        if (width > max_width) continue;
        QnmMode m;
        m.pol = pol;
        m.l = l;
        m.j = j;
        m.re_x = r.z.real();
        m.im_x = im;
        m.width_x = width;
        double base = (2.0 * l + 1.0) / ((n0 * n0 - 1.0) * m.re_x * m.re_x * width);
        if (pol == Polarization::TM) base *= tangential_weight(l, n0, complexd(m.re_x, m.im_x));
        m.k_factor = base;
        out.push_back(m);
    }
    return out;
}

ModeTable build_mode_table(Polarization pol, double n0, double x_max, double width_cap,
                           unsigned threads) {
    check_index(n0);
    if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("x_max must be positive");
    if (!(width_cap > 0.0)) throw DomainError("width_cap must be positive");
    double l_reach = n0 * (x_max + 0.6) + 2.0;
    if (l_reach > sf::kMaxOrder)
        throw DomainError("x_max=" + std::to_string(x_max) + " needs orders beyond " +
                          std::to_string(sf::kMaxOrder) + "; reduce the band");
    const int l_cap = static_cast<int>(std::ceil(l_reach));

    std::vector<std::vector<QnmMode>> per_l(l_cap + 1);
    std::vector<std::exception_ptr> errors(l_cap + 1);
    std::atomic<int> next{1};
    auto worker = [&]() {
        for (int l = next.fetch_add(1); l <= l_cap; l = next.fetch_add(1)) {
            try {
                per_l[l] = find_modes(pol, l, n0, x_max, width_cap);
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
    };
    unsigned nt = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, static_cast<unsigned>(l_cap));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (int l = 1; l <= l_cap; ++l)
        if (errors[l]) std::rethrow_exception(errors[l]);

    ModeTable table;
    table.n0 = n0;
    table.pol = pol;
    table.x_max = x_max;
    table.width_cap = width_cap;
    for (int l = 1; l <= l_cap; ++l)
        table.modes.insert(table.modes.end(), per_l[l].begin(), per_l[l].end());

    // Band-center free spectral range from the j=1 chain, when it exists.
    std::vector<double> chain;
    for (const auto& m : table.modes)
        if (m.j == 1) chain.push_back(m.re_x);
    std::sort(chain.begin(), chain.end());
    double x_c = 0.5 * x_max;
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
        if (chain[i] <= x_c && x_c < chain[i + 1]) {
            table.fsr_x = chain[i + 1] - chain[i];
            break;
        }
    }
    if (table.fsr_x == 0.0 && chain.size() >= 2)
        table.fsr_x = chain.back() - chain[chain.size() - 2];

    validate_mode_table(table);
    return table;
}

void validate_mode_table(const ModeTable& table) {
    if (!(table.n0 > 1.0)) throw ValidationError("mode table: n0 must exceed 1");
    if (!(table.x_max > 0.0)) throw ValidationError("mode table: x_max must be positive");
    const double w_inf = asymptotic_width(table.n0);
    const QnmMode* prev = nullptr;
    for (const auto& m : table.modes) {
        std::string tag = "mode " + to_string(m.pol) + " l=" + std::to_string(m.l) +
                          " j=" + std::to_string(m.j);
        if (m.pol != table.pol) throw ValidationError(tag + ": polarization differs from table");
        if (m.l < 1) throw ValidationError(tag + ": order below 1");
        if (!(m.re_x > 0.0) || !(m.re_x <= table.x_max + 1e-9))
            throw ValidationError(tag + ": position outside (0, x_max]");
        if (!(m.im_x < 0.0)) throw ValidationError(tag + ": not on the decaying branch");
        if (std::abs(m.width_x + 2.0 * m.im_x) > 1e-15 * m.width_x)
            throw ValidationError(tag + ": width_x != 2|im_x|");
        if (!(m.width_x < w_inf + 1e-6))
            throw ValidationError(tag + ": width exceeds the asymptotic limit");
        if (!(m.k_factor > 0.0)) throw ValidationError(tag + ": k_factor must be positive");
        if (prev) {
            bool ordered = prev->l < m.l || (prev->l == m.l && prev->j < m.j);
            if (!ordered) throw ValidationError(tag + ": modes not sorted by (l, j)");
            if (prev->l == m.l) {
                if (!(prev->re_x < m.re_x))
                    throw ValidationError(tag + ": positions not increasing with j");
                if (m.width_x < prev->width_x - 1e-9)
                    throw ValidationError(tag + ": widths decrease with j");
            }
        }
        complexd f = characteristic_value(m.pol, m.l, table.n0, complexd(m.re_x, m.im_x));
        if (std::abs(f) >= 1e-8)
            throw ValidationError(tag + ": cold residual " + std::to_string(std::abs(f)) +
                                  " above 1e-8");
        if (m.pol == Polarization::TE) {
            double k_gamma = (2.0 * m.l + 1.0) / ((table.n0 * table.n0 - 1.0) * m.re_x * m.re_x);
            if (std::abs(m.k_factor * m.width_x - k_gamma) > 1e-9 * k_gamma)
                throw ValidationError(tag + ": k_factor * width breaks the peak-area identity");
        }
        prev = &m;
    }
}

namespace {

std::vector<const QnmMode*> j1_chain(const ModeTable& table) {
    std::vector<const QnmMode*> chain;
    for (const auto& m : table.modes)
        if (m.j == 1) chain.push_back(&m);
    std::sort(chain.begin(), chain.end(),
              [](const QnmMode* a, const QnmMode* b) { return a->re_x < b->re_x; });
    return chain;
}

}  // namespace

double fsr_spacing(const ModeTable& table, double x0) {
    auto chain = j1_chain(table);
    if (chain.size() < 2 || x0 < chain.front()->re_x || x0 > chain.back()->re_x) {
        std::ostringstream os;
        os << "x0=" << x0 << " not bracketed by the j=1 chain";
        if (!chain.empty())
            os << " [" << chain.front()->re_x << ", " << chain.back()->re_x << "]";
        throw RangeError(os.str());
    }
    for (size_t i = 0; i + 1 < chain.size(); ++i)
        if (chain[i]->re_x <= x0 && x0 <= chain[i + 1]->re_x)
            return chain[i + 1]->re_x - chain[i]->re_x;
    return chain.back()->re_x - chain[chain.size() - 2]->re_x;
}

const QnmMode& least_leaky_mode(const ModeTable& table, double x0) {
    auto chain = j1_chain(table);
    if (chain.empty() || x0 < chain.front()->re_x - 1.0 || x0 > chain.back()->re_x + 1.0) {
        std::ostringstream os;
        os << "x0=" << x0 << " outside the j=1 chain coverage";
        throw RangeError(os.str());
    }
    const QnmMode* best = chain.front();
    for (const QnmMode* m : chain) {
        double d = std::abs(m->re_x - x0);
        double db = std::abs(best->re_x - x0);
        if (d < db - 1e-12 || (std::abs(d - db) <= 1e-12 && m->width_x < best->width_x))
            best = m;
    }
    return *best;
}

}  // namespace droplet::qnm
