#pragma once

#include "buckstab/rational.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace buckstab {

/// Frequency sweep data. Frequencies are in hertz, strictly increasing.
struct FrequencyResponse {
    std::vector<double> freq_hz;
    std::vector<Complex> values;
    /// Indices of samples that sat on a pole and were nudged up by one
    /// part in 1e9.
    std::vector<std::size_t> nudged;

    std::vector<double> magnitude_db() const;
    /// Unwrapped phase; adjacent grid points differ by less than 180
    /// degrees (the sweep refines its grid to guarantee it).
    std::vector<double> phase_deg() const;
};

/// Log-spaced sweep of f along the jw axis with adaptive refinement near
/// fast phase variation. Requires 0 < f_min_hz < f_max_hz and
/// points_per_decade >= 10.
FrequencyResponse sweep(const RationalFunction& f, double f_min_hz,
                        double f_max_hz, int points_per_decade);

/// CSV with header freq_hz,real,imag,mag_db,phase_deg; 17 significant
/// digits, byte-identical across runs for identical input.
void write_csv(std::ostream& os, const FrequencyResponse& resp);

/// Winding number of f(s) - about as s traverses the positively oriented
/// boundary of the right half-plane: down the imaginary axis from +jW to
/// -jW with right-half-plane indentations around imaginary-axis poles, closed
/// by the half-circle of radius W through +W. By the argument principle
/// the result is (RHP zeros of f - about) - (RHP poles of f).
///
/// Throws when the contour cannot avoid a pole or passes through `about`,
/// or when adaptive sampling fails to resolve the phase.
int nyquist_winding(const RationalFunction& f, Complex about);

}  // namespace buckstab
