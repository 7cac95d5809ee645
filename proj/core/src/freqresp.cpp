#include "buckstab/freqresp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace buckstab {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_to_pi(double x) {
    while (x > kPi) x -= 2.0 * kPi;
    while (x < -kPi) x += 2.0 * kPi;
    return x;
}

}  // namespace

std::vector<double> FrequencyResponse::magnitude_db() const {
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        out[k] = 20.0 * std::log10(std::abs(values[k]));
    return out;
}

std::vector<double> FrequencyResponse::phase_deg() const {
    std::vector<double> out(values.size());
    double phi = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        double a = std::arg(values[k]);
        phi = (k == 0) ? a : phi + wrap_to_pi(a - prev);
        prev = a;
        out[k] = phi * 180.0 / kPi;
    }
    return out;
}

FrequencyResponse sweep(const RationalFunction& f, double f_min_hz,
                        double f_max_hz, int points_per_decade) {
    if (!(f_min_hz > 0.0) || !(f_min_hz < f_max_hz))
        throw std::invalid_argument("sweep requires 0 < f_min < f_max");
    if (points_per_decade < 10)
        throw std::invalid_argument("sweep requires points_per_decade >= 10");

    struct Sample {
        double freq;
        Complex value;
        bool nudged;
    };
    auto eval = [&f](double freq) -> Sample {
        double w = 2.0 * kPi * freq;
        try {
            return {freq, f(Complex(0.0, w)), false};
        } catch (const PoleEvaluationError&) {
            double nudge = freq * (1.0 + 1e-9);
            return {nudge, f(Complex(0.0, 2.0 * kPi * nudge)), true};
        }
    };

    double decades = std::log10(f_max_hz / f_min_hz);
    int n = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double t = static_cast<double>(k) / static_cast<double>(n - 1);
        samples.push_back(eval(f_min_hz * std::pow(f_max_hz / f_min_hz, t)));
    }

    // Insert geometric midpoints wherever the wrapped phase step reaches
    // 90 degrees, so the unwrapped-phase invariant (< 180 degrees between
    // neighbors) holds with margin.
    for (int pass = 0; pass < 24; ++pass) {
        std::vector<Sample> refined;
        refined.reserve(samples.size());
        bool inserted = false;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            if (k > 0) {
                double step = std::abs(wrap_to_pi(std::arg(samples[k].value) -
                                                  std::arg(samples[k - 1].value)));
                if (step >= kPi / 2.0) {
                    refined.push_back(
                        eval(std::sqrt(samples[k - 1].freq * samples[k].freq)));
                    inserted = true;
                }
            }
            refined.push_back(samples[k]);
        }
        samples = std::move(refined);
        if (!inserted) break;
    }

    FrequencyResponse out;
    out.freq_hz.reserve(samples.size());
    out.values.reserve(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        out.freq_hz.push_back(samples[k].freq);
        out.values.push_back(samples[k].value);
        if (samples[k].nudged) out.nudged.push_back(k);
    }
    return out;
}

void write_csv(std::ostream& os, const FrequencyResponse& resp) {
    os << "freq_hz,real,imag,mag_db,phase_deg\n";
    std::vector<double> mag = resp.magnitude_db();
    std::vector<double> phase = resp.phase_deg();
    char buf[192];
    for (std::size_t k = 0; k < resp.freq_hz.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.16e,%.16e,%.16e,%.16e,%.16e\n",
                      resp.freq_hz[k], resp.values[k].real(),
                      resp.values[k].imag(), mag[k], phase[k]);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Nyquist winding
// ---------------------------------------------------------------------------

namespace {

struct WindingAccumulator {
    const RationalFunction& f;
    Complex about;
    double tiny;
    double total = 0.0;

    Complex value(Complex s) const {
        Complex v;
        try {
            v = f(s);
        } catch (const PoleEvaluationError&) {
            throw std::runtime_error(
                "nyquist contour passes through a pole of the function");
        }
        Complex d = v - about;
        // The guard scales with |about| only: far from the origin a tiny
        // |f - about| means the contour punctures the reference point, but
        // about the origin a strictly proper function shrinks to
        // arbitrarily small magnitudes on the closing arc while its
        // argument stays perfectly well defined.
        if (!(std::abs(d) > tiny))
            throw std::runtime_error(
                "nyquist contour passes through the reference point");
        return d;
    }

    // Accumulate the phase change of f(path(t)) - about over t in [0, 1],
    // splitting until each step turns less than pi/6.
    template <typename Path>
    void walk(const Path& path) {
        struct Node {
            double t;
            Complex v;
        };
        std::vector<Node> stack;
        Node left{0.0, value(path(0.0))};
        stack.push_back({1.0, value(path(1.0))});
        int evals = 0;
        while (!stack.empty()) {
            Node right = stack.back();
            double dphi = std::arg(right.v / left.v);
            double dmag = std::abs(std::log(std::abs(right.v / left.v)));
            double gap = right.t - left.t;
            if ((std::abs(dphi) < kPi / 6.0 && dmag < 1.0 && gap < 1.0 / 32.0) ||
                gap < 1e-14) {
                total += dphi;
                left = right;
                stack.pop_back();
                continue;
            }
            if (++evals > 4000000)
                throw std::runtime_error(
                    "nyquist contour sampling failed to resolve the phase");
            double tm = 0.5 * (left.t + right.t);
            stack.push_back({tm, value(path(tm))});
        }
    }
};

}  // namespace

int nyquist_winding(const RationalFunction& f, Complex about) {
    if (f.is_zero()) {
        if (std::abs(about) == 0.0)
            throw std::runtime_error(
                "nyquist contour passes through the reference point");
        return 0;
    }

    // Feature radii from every pole and zero magnitude.
    std::vector<Complex> feature_roots;
    if (!f.num().is_zero() && *f.num().degree() >= 1)
        for (const Complex& r : poly_roots(f.num()).expanded())
            feature_roots.push_back(r);
    std::vector<Complex> den_roots;
    if (*f.den().degree() >= 1)
        den_roots = poly_roots(f.den()).expanded();
    for (const Complex& r : den_roots) feature_roots.push_back(r);

    double hi_feature = 0.0;
    for (const Complex& r : feature_roots)
        hi_feature = std::max(hi_feature, std::abs(r));
    double lo_feature = std::numeric_limits<double>::infinity();
    for (const Complex& r : feature_roots) {
        double m = std::abs(r);
        if (m > 1e-12 * std::max(1.0, hi_feature))
            lo_feature = std::min(lo_feature, m);
    }
    if (!std::isfinite(lo_feature)) lo_feature = 1e-3;
    if (hi_feature == 0.0) hi_feature = 1.0;
    double indent = 1e-6 * lo_feature;
    double radius = 1e3 * hi_feature;

    // Imaginary-axis poles need indentation; collect their ordinates.
    std::vector<double> axis_poles;
    for (const Complex& r : den_roots) {
        if (std::abs(r.real()) <= 1e-9 * std::max(1.0, std::abs(r)))
            axis_poles.push_back(r.imag());
    }
    std::sort(axis_poles.begin(), axis_poles.end(),
              [](double a, double b) { return a > b; });
    axis_poles.erase(std::unique(axis_poles.begin(), axis_poles.end(),
                                 [&](double a, double b) {
                                     return std::abs(a - b) <= indent;
                                 }),
                     axis_poles.end());
    for (std::size_t k = 0; k + 1 < axis_poles.size(); ++k) {
        if (axis_poles[k] - axis_poles[k + 1] < 3.0 * indent)
            throw std::runtime_error(
                "imaginary-axis poles too close for indentation");
    }

    WindingAccumulator acc{f, about, 1e-12 * std::abs(about)};

    // Resonant ordinates of every pole and zero: the response turns
    // fastest near them, so they become mandatory sample boundaries on
    // the axis descent.
    std::vector<double> marks;
    for (const Complex& r : feature_roots) marks.push_back(r.imag());
    std::sort(marks.begin(), marks.end(), [](double a, double b) { return a > b; });

    auto descend = [&](double w_hi, double w_lo) {
        std::vector<double> stops{w_hi};
        for (double m : marks)
            if (m < w_hi && m > w_lo) stops.push_back(m);
        stops.push_back(w_lo);
        for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
            double a = stops[k];
            double b = stops[k + 1];
            if (a == b) continue;
            acc.walk([a, b](double t) {
                return Complex(0.0, a + (b - a) * t);
            });
        }
    };

    // Descend the imaginary axis from +jW to -jW, stepping around each
    // axis pole on a right-half-plane semicircle.
    double w_cursor = radius;
    for (double wp : axis_poles) {
        descend(w_cursor, wp + indent);
        acc.walk([wp, indent](double t) {
            double theta = kPi / 2.0 - kPi * t;
            return Complex(0.0, wp) +
                   indent * Complex(std::cos(theta), std::sin(theta));
        });
        w_cursor = wp - indent;
    }
    descend(w_cursor, -radius);
    // Close through the right half-plane arc from -jW to +jW.
    acc.walk([radius](double t) {
        double theta = -kPi / 2.0 + kPi * t;
        return Complex(radius * std::cos(theta), radius * std::sin(theta));
    });

    double turns = acc.total / (2.0 * kPi);
    double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.2)
        throw std::runtime_error("nyquist winding did not close to an integer");
    return static_cast<int>(rounded);
}

}  // namespace buckstab
