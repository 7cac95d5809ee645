#include "buckstab/closed_loop.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace buckstab;
using namespace buckstab::test;

namespace {

constexpr double two_pi = 6.283185307179586;

std::vector<Complex> matrix_eigenvalues(const Eigen::Matrix3d& a) {
    Eigen::EigenSolver<Eigen::Matrix3d> solver(a);
    std::vector<Complex> out;
    for (int k = 0; k < 3; ++k) out.push_back(solver.eigenvalues()(k));
    return out;
}

/// Random stage without any stability screening.
StageSpec random_stage(std::mt19937& rng) {
    auto log_uniform = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
    };
    std::uniform_real_distribution<double> duty(0.15, 0.85);
    StageSpec s;
    s.params = random_params(rng);
    s.v_ref = duty(rng) * s.params.v_in;
    s.gains.kp = log_uniform(1e-4, 0.2);
    s.gains.ki = log_uniform(1.0, 5e4);
    return s;
}

}  // namespace

TEST_SUITE("closed_loop") {

TEST_CASE("pi transfer function") {
    RationalFunction c = pi_controller({0.0093602, 275.3});
    CHECK(c.num() == Polynomial{275.3, 0.0093602});
    CHECK(c.den() == Polynomial::monomial(1));
}

TEST_CASE("pure proportional controller is a constant") {
    RationalFunction c = pi_controller({1.0, 0.0});
    CHECK(c.num() == Polynomial{1.0});
    CHECK(c.den() == Polynomial{1.0});
}

TEST_CASE("controller identity s C(s) = kp s + ki") {
    PiGains g{0.02, 400.0};
    RationalFunction c = pi_controller(g);
    for (double w : {1.0, 100.0, 1e4, 1e6}) {
        Complex jw(0.0, w);
        CHECK(near_rel(c(jw) * jw, g.kp * jw + g.ki, 1e-12));
    }
}

TEST_CASE("degenerate controller is rejected") {
    CHECK_THROWS_AS(pi_controller({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(pi_controller({-0.1, 10.0}), std::invalid_argument);
}

TEST_CASE("case-study source characteristic polynomial") {
    ClosedLoopSet loop = close_loop(source_stage());
    CHECK(loop.stability.verdict == Verdict::stable);
    // Scale the monic form by L R C to compare with the literal
    // coefficients of the R parameterization.
    double lrc = 1.67e-4 * 5.0 * 3.75e-6;
    Polynomial scaled = loop.char_poly * lrc;
    CHECK(near_rel(scaled.coeff(0), 137650.0, 1e-12));
    CHECK(near_rel(scaled.coeff(1), 9.6801, 1e-12));
    CHECK(near_rel(scaled.coeff(2), 1.67e-4, 1e-12));
    CHECK(near_rel(scaled.coeff(3), 3.13125e-9, 1e-12));
}

TEST_CASE("both case-study stages are stable standalone") {
    CHECK(close_loop(source_stage()).stability.verdict == Verdict::stable);
    CHECK(close_loop(load_stage()).stability.verdict == Verdict::stable);
}

TEST_CASE("integral action rejects input disturbance at dc") {
    ClosedLoopSet loop = close_loop(source_stage());
    CHECK(loop.g_vg(Complex(0.0, 0.0)) == Complex(0.0, 0.0));
    CHECK(loop.z_out(Complex(0.0, 0.0)) == Complex(0.0, 0.0));
}

TEST_CASE("vanishing controller recovers the open loop") {
    StageSpec s = source_stage();
    s.gains.kp = 1e-9;
    s.gains.ki = 0.0;
    ClosedLoopSet loop = close_loop(s);
    OperatingPoint op = operating_point(s.params, s.v_ref);
    BuckSmallSignal open(s.params, op);
    for (double w : {100.0, 1e4, 1e5}) {
        Complex jw(0.0, w);
        CHECK(near_rel(loop.g_vg(jw),
                       open.transfer(BuckOutput::capacitor_voltage,
                                     BuckInput::input_voltage)(jw),
                       1e-5));
        CHECK(near_rel(-loop.z_out(jw),
                       open.transfer(BuckOutput::capacitor_voltage,
                                     BuckInput::load_current)(jw),
                       1e-5));
    }
}

TEST_CASE("closed-loop impedance is the open loop over the sensitivity") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> log_w(1.0, 6.5);
    for (int trial = 0; trial < 5; ++trial) {
        StageSpec s = random_stable_stage(rng);
        ClosedLoopSet loop = close_loop(s);
        BuckSmallSignal open(s.params, operating_point(s.params, s.v_ref));
        RationalFunction z_out_ol =
            -open.transfer(BuckOutput::capacitor_voltage,
                           BuckInput::load_current);
        for (int k = 0; k < 20; ++k) {
            Complex jw(0.0, std::pow(10.0, log_w(rng)));
            Complex t = loop.loop_gain(jw);
            CHECK(near_rel(loop.z_out(jw), z_out_ol(jw) / (1.0 + t), 1e-9));
        }
    }
}

TEST_CASE("closed-loop quantities share the characteristic denominator") {
    ClosedLoopSet loop = close_loop(load_stage());
    RootSet char_roots = poly_roots(loop.char_poly);
    CHECK(roots_match(poly_roots(loop.g_vg.den()).expanded(),
                      char_roots.expanded(), 1e-9));
    CHECK(roots_match(poly_roots(loop.z_out.den()).expanded(),
                      char_roots.expanded(), 1e-9));
    CHECK(roots_match(poly_roots(loop.ref_tracking.den()).expanded(),
                      char_roots.expanded(), 1e-9));
}

TEST_CASE("characteristic roots equal augmented state-matrix eigenvalues") {
    std::mt19937 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        StageSpec s = random_stage(rng);
        ClosedLoopSet loop = close_loop(s);
        std::vector<Complex> eig = matrix_eigenvalues(stage_state_matrix(s));
        CHECK(roots_match(poly_roots(loop.char_poly).expanded(), eig, 1e-7));
    }
}

TEST_CASE("dc input resistance is the negative incremental value") {
    ClosedLoopSet loop = close_loop(load_stage());
    Complex y0 = loop.y_in(Complex(0.0, 0.0));
    CHECK(near_rel(1.0 / y0.real(), -3.2, 1e-9));
    CHECK(std::abs(y0.imag()) < 1e-15 * std::abs(y0.real()));
}

TEST_CASE("paper mode reports infinite dc input resistance") {
    ClosedLoopSet loop = close_loop(load_stage(Feedthrough::paper));
    CHECK(loop.y_in(Complex(0.0, 0.0)) == Complex(0.0, 0.0));
}

TEST_CASE("dc input resistance formula near unity duty") {
    StageSpec s;
    s.params.v_in = 10.0;
    s.params.l = 1e-5;
    s.params.c = 1e-5;
    s.params.r_load = 1.0;
    s.v_ref = 9.9;
    s.gains.kp = 0.001;
    s.gains.ki = 50.0;
    ClosedLoopSet loop = close_loop(s);
    double d = 0.99;
    CHECK(near_rel(1.0 / loop.y_in(Complex(0.0, 0.0)).real(), -1.0 / (d * d),
                   1e-9));
}

TEST_CASE("reference tracking has unity dc gain") {
    ClosedLoopSet loop = close_loop(source_stage());
    CHECK(near_rel(loop.ref_tracking(Complex(0.0, 0.0)).real(), 1.0, 1e-9));
}

TEST_CASE("margins of a pure integrator") {
    RationalFunction t(Polynomial{1.0}, Polynomial::monomial(1));
    Margins m = loop_margins(t);
    REQUIRE(m.gain_crossover_hz.has_value());
    CHECK(near_rel(*m.gain_crossover_hz, 1.0 / two_pi, 1e-6));
    REQUIRE(m.phase_margin_deg.has_value());
    CHECK(std::abs(*m.phase_margin_deg - 90.0) < 1e-6);
    CHECK(!m.gain_margin_db.has_value());
    CHECK(!m.phase_crossover_hz.has_value());
}

TEST_CASE("integrator gain scales the crossover") {
    RationalFunction t(Polynomial{10.0}, Polynomial::monomial(1));
    Margins m = loop_margins(t);
    REQUIRE(m.gain_crossover_hz.has_value());
    CHECK(near_rel(*m.gain_crossover_hz, 10.0 / two_pi, 1e-6));
}

TEST_CASE("case-study source margins") {
    ClosedLoopSet loop = close_loop(source_stage());
    Margins m = loop_margins(loop.loop_gain);
    REQUIRE(m.phase_margin_deg.has_value());
    REQUIRE(m.gain_crossover_hz.has_value());
    CHECK(*m.phase_margin_deg > 0.0);
    CHECK(std::abs(*m.phase_margin_deg - 59.994) < 0.05);
    CHECK(std::abs(*m.gain_crossover_hz - 5695.08) < 1.0);
    CHECK(!m.gain_margin_db.has_value());
    CHECK(loop.stability.verdict == Verdict::stable);
}

TEST_CASE("margins are grid converged") {
    ClosedLoopSet loop = close_loop(source_stage());
    Margins coarse = loop_margins(loop.loop_gain, 1e1, 1e7, 200);
    Margins fine = loop_margins(loop.loop_gain, 1e1, 1e7, 400);
    CHECK(std::abs(*coarse.phase_margin_deg - *fine.phase_margin_deg) < 0.1);

    // A three-pole loop with a genuine -180 degree crossing.
    RationalFunction t(
        Polynomial{1e5},
        Polynomial::from_roots({{-10.0, 0.0}, {-100.0, 0.0}, {-1000.0, 0.0}}));
    Margins g200 = loop_margins(t, 1e0, 1e5, 200);
    Margins g400 = loop_margins(t, 1e0, 1e5, 400);
    REQUIRE(g200.gain_margin_db.has_value());
    REQUIRE(g400.gain_margin_db.has_value());
    CHECK(std::abs(*g200.gain_margin_db - *g400.gain_margin_db) < 0.1);
    CHECK(std::abs(*g200.phase_margin_deg - *g400.phase_margin_deg) < 0.1);
}

TEST_CASE("zero loop gain has no crossings") {
    Margins m = loop_margins(RationalFunction());
    CHECK(!m.gain_crossover_hz.has_value());
    CHECK(!m.phase_margin_deg.has_value());
    CHECK(!m.gain_margin_db.has_value());
}

}  // TEST_SUITE
