#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "bigfloat_oracle.hpp"
#include "droplet/qnm.hpp"
#include "droplet/serialize.hpp"
#include "shared_table.hpp"

namespace qnm = droplet::qnm;
namespace io = droplet::io;
using droplet::ConvergenceError;
using droplet::DomainError;
using droplet::ParseError;
using droplet::RangeError;
using droplet::ValidationError;
using qnm::Polarization;
using complexd = std::complex<double>;
using testutil::small_table;

namespace {

struct FrozenRoot {
    double re, im;
};

// j=1 roots for l = 1..13, n0 = 1.47, from the frozen high-precision solve.
const std::vector<FrozenRoot>& chain_l1() {
    static const std::vector<FrozenRoot> c = {
        {1.9169492951858555373, -0.51239224757411187246},
        {4.1653497496674867647, -0.55287610293974131581},
        {6.3390317567169395208, -0.55937440903173198276},
        {8.4943304925195565515, -0.56158095226498656767},
        {10.642337233253586454, -0.56259061742838305617},
        {12.786711714514135675, -0.56313601581301005637},
        {14.929014780411463608, -0.56346383702463899857},
        {17.070024756026022214, -0.56367618931320622634},
        {19.210173333006268687, -0.56382158832414736199},
        {21.349719246275845943, -0.56392549716253196095},
        {23.488827021914543636, -0.56400232741431985327},
        {25.627606284599211496, -0.56406073436126428013},
        {27.766132897683677025, -0.56410617151350869212},
    };
    return c;
}

const std::vector<FrozenRoot>& chain_l5() {
    static const std::vector<FrozenRoot> c = {
        {5.1118413915102629448, -0.30136069007620661259},
        {7.6359344150786991604, -0.48378346209372267192},
        {9.9871032632463302096, -0.52503519518676182409},
        {12.254084572917484567, -0.54043558813692678809},
        {14.479064234146321635, -0.54804990634410993817},
        {16.679935281424684836, -0.55244234488987373919},
        {18.86558172304027608, -0.55523329258286970936},
        {21.040951654037329879, -0.55712838636957159922},
        {23.209036509857743231, -0.55847925359859554203},
        {25.37175865501071752, -0.55947870202529637334},
        {27.530413227554495885, -0.56024029279234010377},
        {29.685906347519343373, -0.56083473695308084791},
        {31.838891852289421733, -0.56130807026782223861},
        {33.98985386187081975, -0.56169137972217498399},
        {36.139158762474915679, -0.56200630935405707735},
    };
    return c;
}

const std::vector<FrozenRoot>& chain_l35_in_24_40() {
    static const std::vector<FrozenRoot> c = {
        {27.46817608062730109, -0.00021059967303914047514},
        {30.877493490407152107, -0.015202705389477244793},
        {33.820558197259964118, -0.11529268877858280128},
        {36.636307469034954366, -0.25441411096023440355},
        {39.368647609319005888, -0.34606658014703091459},
    };
    return c;
}

void check_root(const qnm::QnmMode& mode, const FrozenRoot& want, double tol) {
    CAPTURE(mode.l);
    CAPTURE(mode.j);
    complexd got(mode.re_x, mode.im_x);
    complexd ref(want.re, want.im);
    CHECK(std::abs(got - ref) <= tol * std::max(1.0, std::abs(ref)));
}

}  // namespace

TEST_CASE("asymptotic width equals log((n0+1)/(n0-1))/n0") {
    CHECK(qnm::asymptotic_width(1.2) == doctest::Approx(1.998246060665308786718).epsilon(1e-13));
    CHECK(qnm::asymptotic_width(1.47) == doctest::Approx(1.12873519382171333962).epsilon(1e-13));
    CHECK(qnm::asymptotic_width(2.0) == doctest::Approx(0.5493061443340548456976).epsilon(1e-13));
    for (double n0 : {1.1, 1.6, 3.0})
        CHECK(qnm::asymptotic_width(n0) ==
              doctest::Approx(std::log((n0 + 1.0) / (n0 - 1.0)) / n0).epsilon(1e-15));
    CHECK_THROWS_AS(qnm::asymptotic_width(1.0), DomainError);
}

TEST_CASE("characteristic derivative agrees with finite differences") {
    std::mt19937 rng(424242u);
    std::uniform_real_distribution<double> re(2.0, 20.0);
    std::uniform_real_distribution<double> im(-0.5, -0.05);
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
        for (int l : {1, 5, 12}) {
            for (int k = 0; k < 6; ++k) {
                complexd x(re(rng), im(rng));
                CAPTURE(l);
                CAPTURE(x.real());
                CAPTURE(x.imag());
                complexd f = qnm::characteristic_value(pol, l, 1.47, x);
                if (std::abs(f) > 50.0) continue;  // too close to a pole for differencing
                double h = 1e-6;
                complexd fd = (qnm::characteristic_value(pol, l, 1.47, x + h) -
                               qnm::characteristic_value(pol, l, 1.47, x - h)) /
                              (2.0 * h);
                complexd an = qnm::characteristic_derivative(pol, l, 1.47, x);
                CHECK(std::abs(an - fd) <= 2e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("TE order-zero family follows the closed form") {
    for (double n0 : {1.2, 1.47, 2.0}) {
        double w = qnm::asymptotic_width(n0);
        double x_max = std::numbers::pi * 8.6 / n0;
        auto modes = qnm::find_modes(Polarization::TE, 0, n0, x_max, 1.2 * w);
        REQUIRE(modes.size() >= 8);
        for (int k = 0; k < 8; ++k) {
            complexd want(std::numbers::pi * (2 * k + 1) / (2.0 * n0), -0.5 * w);
            complexd got(modes[k].re_x, modes[k].im_x);
            CAPTURE(n0);
            CAPTURE(k);
            CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
            CHECK(modes[k].j == k + 1);
        }
    }
}

TEST_CASE("frozen resonance chains are reproduced") {
    SUBCASE("l=1 chain and the count below x=20") {
        auto modes = qnm::find_modes(Polarization::TE, 1, 1.47, 28.4,
                                     1.2 * qnm::asymptotic_width(1.47));
        REQUIRE(modes.size() >= chain_l1().size());
        for (size_t j = 0; j < chain_l1().size(); ++j) check_root(modes[j], chain_l1()[j], 1e-8);
        int below_20 = 0;
        for (const auto& m : modes)
            if (m.re_x <= 20.0) ++below_20;
        CHECK(below_20 == 9);
    }
    SUBCASE("l=5 chain") {
        auto modes = qnm::find_modes(Polarization::TE, 5, 1.47, 37.0,
                                     1.2 * qnm::asymptotic_width(1.47));
        REQUIRE(modes.size() >= chain_l5().size());
        for (size_t j = 0; j < chain_l5().size(); ++j) check_root(modes[j], chain_l5()[j], 1e-8);
    }
    SUBCASE("l=35 band holds exactly five roots in [24, 40]") {
        auto modes = qnm::find_modes(Polarization::TE, 35, 1.47, 40.0,
                                     1.2 * qnm::asymptotic_width(1.47));
        std::vector<qnm::QnmMode> in_band;
        for (const auto& m : modes)
            if (m.re_x >= 24.0 && m.re_x <= 40.0) in_band.push_back(m);
        REQUIRE(in_band.size() == 5);
        for (size_t j = 0; j < 5; ++j) check_root(in_band[j], chain_l35_in_24_40()[j], 1e-8);
    }
}

TEST_CASE("width filter drops only the trailing radial orders") {
    double w = qnm::asymptotic_width(1.47);
    auto narrow = qnm::find_modes(Polarization::TE, 35, 1.47, 40.0, 0.1);
    REQUIRE(narrow.size() == 2);
    CHECK(narrow[0].j == 1);
    CHECK(narrow[1].j == 2);
    auto none = qnm::find_modes(Polarization::TE, 5, 1.47, 37.0, 0.2);
    CHECK(none.empty());
    auto all = qnm::find_modes(Polarization::TE, 35, 1.47, 40.0, 1.2 * w);
    CHECK(all.size() >= 5);
    CHECK(all[0].j == 1);
}

TEST_CASE("shared table passes structural validation and chain invariants") {
    const qnm::ModeTable& table = small_table();
    CHECK_NOTHROW(qnm::validate_mode_table(table));
    CHECK(table.fsr_x > 0.0);

    int last_l = 0, last_j = 0;
    double last_width = 0.0;
    for (const auto& m : table.modes) {
        if (m.l != last_l) {
            CHECK(m.j == 1);
            last_l = m.l;
        } else {
            CHECK(m.j == last_j + 1);
            CHECK(m.width_x >= last_width - 1e-12);
        }
        last_j = m.j;
        last_width = m.width_x;
        double k_gamma = (2.0 * m.l + 1.0) / ((1.47 * 1.47 - 1.0) * m.re_x * m.re_x);
        CHECK(std::abs(m.k_factor * m.width_x - k_gamma) <= 1e-12 * k_gamma);
    }
}

TEST_CASE("free spectral range and least-leaky queries") {
    const qnm::ModeTable& table = small_table();
    // spacing of the j=1 chain around x = 12.3: bracket is l=14 to l=15
    double expect = 12.796801657502272668 - 12.041529430329385382;
    CHECK(qnm::fsr_spacing(table, 12.3) == doctest::Approx(expect).epsilon(1e-7));
    CHECK_THROWS_AS(qnm::fsr_spacing(table, 1.0), RangeError);
    CHECK_THROWS_AS(qnm::fsr_spacing(table, 27.0), RangeError);

    const qnm::QnmMode& near = qnm::least_leaky_mode(table, 12.3);
    CHECK(near.l == 14);
    CHECK(near.j == 1);
    const qnm::QnmMode& exact = qnm::least_leaky_mode(table, 12.041529430329385382);
    CHECK(exact.l == 14);
    CHECK_THROWS_AS(qnm::least_leaky_mode(table, 0.5), RangeError);
    CHECK_THROWS_AS(qnm::least_leaky_mode(table, 27.5), RangeError);
}

TEST_CASE("TM modes sit on the decaying branch with bounded weights") {
    auto modes = qnm::find_modes(Polarization::TM, 5, 1.47, 20.0,
                                 1.2 * qnm::asymptotic_width(1.47));
    REQUIRE(!modes.empty());
    for (const auto& m : modes) {
        CAPTURE(m.j);
        CHECK(m.im_x < 0.0);
        complexd f = qnm::characteristic_value(Polarization::TM, m.l, 1.47,
                                               complexd(m.re_x, m.im_x));
        CHECK(std::abs(f) < 1e-8);
        CHECK(m.k_factor > 0.0);
        CHECK(std::isfinite(m.k_factor));
    }
}

TEST_CASE("root counts match the 50-digit winding reference") {
    // fixed window over the known l=5 chain
    int fixed = qnm::count_roots(Polarization::TE, 5, 1.47, complexd(4.5, -0.6),
                                 complexd(21.0, 0.04), {});
    CHECK(fixed == 7);
    CHECK(fixed == oracle::ref_winding(Polarization::TE, 5, 1.47, complexd(4.5, -0.6),
                                       complexd(21.0, 0.04)));

    std::mt19937 rng(90210u);
    std::uniform_int_distribution<int> order(1, 40);
    std::uniform_real_distribution<double> lo_re(1.0, 40.0);
    std::uniform_real_distribution<double> span(2.0, 5.0);
    std::uniform_real_distribution<double> depth(0.5, 1.0);
    const double n0s[3] = {1.2, 1.47, 2.0};
    int checked = 0;
    for (int k = 0; k < 8; ++k) {
        int l = order(rng);
        double n0 = n0s[k % 3];
        Polarization pol = (k % 2 == 0) ? Polarization::TE : Polarization::TM;
        complexd lo(lo_re(rng), -depth(rng));
        complexd hi(lo.real() + span(rng), 0.04);
        CAPTURE(l);
        CAPTURE(n0);
        CAPTURE(lo.real());
        CAPTURE(hi.real());
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                int got = qnm::count_roots(pol, l, n0, lo, hi, {});
                int want = oracle::ref_winding(pol, l, n0, lo, hi);
                CHECK(got == want);
                ++checked;
                break;
            } catch (const std::exception&) {
                // boundary grazed a root; nudge the window and retry
                lo += complexd(0.0137, -0.0031);
                hi += complexd(0.0137, -0.0031);
            }
        }
    }
    CHECK(checked == 8);
}

TEST_CASE("mode tables serialize losslessly") {
    const qnm::ModeTable& table = small_table();

    std::string csv = io::modes_to_csv(table.modes);
    auto parsed = io::modes_from_csv(csv);
    REQUIRE(parsed.size() == table.modes.size());
    for (size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].pol == table.modes[i].pol);
        CHECK(parsed[i].l == table.modes[i].l);
        CHECK(parsed[i].j == table.modes[i].j);
        CHECK(parsed[i].re_x == table.modes[i].re_x);
        CHECK(parsed[i].im_x == table.modes[i].im_x);
        CHECK(parsed[i].width_x == table.modes[i].width_x);
        CHECK(parsed[i].k_factor == table.modes[i].k_factor);
    }

    nlohmann::json j = io::mode_table_to_json(table);
    qnm::ModeTable back = io::mode_table_from_json(j);
    CHECK(back.n0 == table.n0);
    CHECK(back.pol == table.pol);
    CHECK(back.x_max == table.x_max);
    CHECK(back.width_cap == table.width_cap);
    CHECK(back.fsr_x == table.fsr_x);
    REQUIRE(back.modes.size() == table.modes.size());
    CHECK(back.modes.back().re_x == table.modes.back().re_x);
    CHECK_NOTHROW(qnm::validate_mode_table(back));
}

TEST_CASE("mode CSV parsing rejects malformed input with line numbers") {
    CHECK_THROWS_AS(io::modes_from_csv("not,a,header\n"), ParseError);
    std::string bad_fields = "pol,l,j,re_x,im_x,width_x,k_factor\nTE,1,1,2.0,-0.5\n";
    CHECK_THROWS_AS(io::modes_from_csv(bad_fields), ParseError);
    std::string bad_number =
        "pol,l,j,re_x,im_x,width_x,k_factor\n"
        "TE,1,1,1.9,-0.51,1.02,0.68\n"
        "TE,1,2,oops,-0.55,1.10,0.13\n";
    try {
        io::modes_from_csv(bad_number);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("table validation names the first offending mode") {
    qnm::ModeTable broken = small_table();
    broken.modes[0].re_x += 1e-3;
    CHECK_THROWS_AS(qnm::validate_mode_table(broken), ValidationError);

    qnm::ModeTable negative = small_table();
    negative.modes[0].k_factor = -1.0;
    try {
        qnm::validate_mode_table(negative);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("l=1") != std::string::npos);
    }
}

TEST_CASE("band limits and string parsing contracts") {
    CHECK_THROWS_AS(qnm::build_mode_table(Polarization::TE, 1.47, 400.0, 1.0), DomainError);
    CHECK_THROWS_AS(qnm::build_mode_table(Polarization::TE, 0.9, 10.0, 1.0), DomainError);
    CHECK(qnm::to_string(Polarization::TE) == "TE");
    CHECK(qnm::to_string(Polarization::TM) == "TM");
    CHECK(qnm::polarization_from_string("TE") == Polarization::TE);
    CHECK(qnm::polarization_from_string("TM") == Polarization::TM);
    CHECK_THROWS_AS(qnm::polarization_from_string("TX"), ParseError);
}
