#pragma once

#include "buckstab/cascade.hpp"
#include "buckstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace buckstab::test {

/// Case-study source converter: 100 V in, 50 V out, 5 ohm load.
inline StageSpec source_stage(Feedthrough mode = Feedthrough::physical) {
    StageSpec s;
    s.params.v_in = 100.0;
    s.params.l = 1.67e-4;
    s.params.c = 3.75e-6;
    s.params.r_load = 5.0;
    s.v_ref = 50.0;
    s.gains.kp = 0.0093602;
    s.gains.ki = 275.3;
    s.feedthrough = mode;
    return s;
}

/// Case-study load converter running from the 50 V bus at 25 V out.
inline StageSpec load_stage(Feedthrough mode = Feedthrough::physical) {
    StageSpec s;
    s.params.v_in = 50.0;
    s.params.l = 3.0e-6;
    s.params.c = 2.344e-5;
    s.params.r_load = 0.8;
    s.v_ref = 25.0;
    s.gains.kp = 0.01956;
    s.gains.ki = 537.4;
    s.feedthrough = mode;
    return s;
}

inline bool near_rel(double a, double b, double rtol) {
    return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
}

inline bool near_rel(Complex a, Complex b, double rtol) {
    return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
}

/// Greedy nearest-pair matching of two complex multisets; true when every
/// pair lies within rtol relative distance.
inline bool roots_match(std::vector<Complex> a, std::vector<Complex> b,
                        double rtol) {
    if (a.size() != b.size()) return false;
    for (const Complex& x : a) {
        std::size_t best = b.size();
        double best_d = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            double d = std::abs(x - b[j]);
            if (best == b.size() || d < best_d) {
                best = j;
                best_d = d;
            }
        }
        if (best == b.size()) return false;
        if (best_d > rtol * std::max(1.0, std::abs(x))) return false;
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return true;
}

/// Conjugate-closed random roots, pairwise separated by at least
/// min_sep relative to their magnitude scale.
inline std::vector<Complex> random_roots(std::mt19937& rng, int degree,
                                         double min_sep = 1e-2,
                                         bool allow_rhp = false) {
    std::uniform_real_distribution<double> log_mag(0.0, 4.0);
    std::uniform_real_distribution<double> angle(0.1, 3.04);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (true) {
        std::vector<Complex> roots;
        while (static_cast<int>(roots.size()) < degree) {
            double mag = std::pow(10.0, log_mag(rng));
            bool rhp = allow_rhp && coin(rng) < 0.3;
            double sign = rhp ? 1.0 : -1.0;
            if (degree - static_cast<int>(roots.size()) >= 2 &&
                coin(rng) < 0.6) {
                double th = angle(rng);
                Complex r(sign * mag * std::abs(std::cos(th)),
                          mag * std::sin(th));
                roots.push_back(r);
                roots.push_back(std::conj(r));
            } else {
                roots.push_back(Complex(sign * mag, 0.0));
            }
        }
        double scale = 0.0;
        for (const Complex& r : roots) scale = std::max(scale, std::abs(r));
        bool separated = true;
        for (std::size_t i = 0; i < roots.size() && separated; ++i)
            for (std::size_t j = i + 1; j < roots.size(); ++j)
                if (std::abs(roots[i] - roots[j]) < min_sep * scale &&
                    roots[i] != std::conj(roots[j])) {
                    separated = false;
                    break;
                }
        if (separated) return roots;
    }
}

/// Random desk-scale converter parameters, log-uniform per component.
inline BuckParams random_params(std::mt19937& rng) {
    auto log_uniform = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
    };
    BuckParams p;
    p.v_in = log_uniform(20.0, 200.0);
    p.l = log_uniform(1e-6, 1e-3);
    p.c = log_uniform(1e-7, 1e-4);
    p.r_load = log_uniform(0.5, 50.0);
    return p;
}

/// Random stage, redrawn until its standalone closed loop is stable.
inline StageSpec random_stable_stage(std::mt19937& rng,
                                     Feedthrough mode = Feedthrough::physical) {
    std::uniform_real_distribution<double> duty(0.25, 0.75);
    auto log_uniform = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
    };
    while (true) {
        StageSpec s;
        s.params = random_params(rng);
        s.v_ref = duty(rng) * s.params.v_in;
        s.gains.kp = log_uniform(1e-4, 0.05);
        s.gains.ki = log_uniform(10.0, 5000.0);
        s.feedthrough = mode;
        if (close_loop(s).stability.verdict == Verdict::stable) return s;
    }
}

/// Inverse Laplace of n/d at time t as a residue sum; requires simple
/// poles.
inline double residue_sum(const Polynomial& n, const Polynomial& d, double t) {
    RootSet poles = poly_roots(d);
    Polynomial dp = d.derivative();
    Complex acc(0.0, 0.0);
    for (const Complex& p : poles.roots)
        acc += n(p) / dp(p) * std::exp(p * t);
    return acc.real();
}

/// Step response of h to a step of the given height, by partial fractions.
inline double step_response(const RationalFunction& h, double height,
                            double t) {
    return height *
           residue_sum(h.num(), h.den() * Polynomial::monomial(1), t);
}

}  // namespace buckstab::test
