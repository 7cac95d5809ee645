#pragma once

#include "buckstab/rational.hpp"

#include <Eigen/Core>

#include <optional>

namespace buckstab {

/// Averaged buck power-stage components. The load resistor is optional:
/// an absent r_load is an open load, handled as zero conductance so the
/// model stays regular.
struct BuckParams {
    double v_in = 0.0;
    double l = 0.0;
    double c = 0.0;
    std::optional<double> r_load;

    double load_conductance() const { return r_load ? 1.0 / *r_load : 0.0; }
    void validate() const;
};

/// DC operating point of the averaged model.
struct OperatingPoint {
    double duty = 0.0;
    double i_l = 0.0;
    double v_c = 0.0;
};

/// Steady state for a regulated output v_ref with an extra DC load draw.
/// Requires 0 <= v_ref < v_in; a buck cannot step up.
OperatingPoint operating_point(const BuckParams& params, double v_ref,
                               double i_load = 0.0);

/// Input-current model. The averaged input current is d * i_l; linearizing
/// gives D * i_l_hat + I_L * d_hat. The paper variant drops the I_L * d_hat
/// feedthrough term.
enum class Feedthrough { physical, paper };

const char* to_string(Feedthrough mode);

enum class BuckOutput { inductor_current, capacitor_voltage, input_current };
enum class BuckInput { input_voltage, load_current, duty };

/// Open-loop small-signal transfer functions of one averaged buck stage,
/// linearized about an operating point.
///
/// State x = [i_l, v_c], inputs u = [v_in, i_load, d] with i_load drawn
/// out of the output node:
///
///   d(i_l)/dt = (d * v_in - v_c) / L
///   d(v_c)/dt = (i_l - G * v_c - i_load) / C
///
/// Every entry shares the denominator L*C*s^2 + L*G*s + 1.
class BuckSmallSignal {
public:
    BuckSmallSignal(BuckParams params, OperatingPoint op,
                    Feedthrough mode = Feedthrough::physical);

    const BuckParams& params() const { return params_; }
    const OperatingPoint& op() const { return op_; }
    Feedthrough feedthrough() const { return mode_; }

    const RationalFunction& transfer(BuckOutput out, BuckInput in) const;

    /// Denominator common to all entries (G-parameterized, regular for an
    /// open load).
    const Polynomial& characteristic() const { return delta_; }

    Eigen::Matrix2d state_matrix() const;
    /// Input matrix over [v_in, i_load, d].
    Eigen::Matrix<double, 2, 3> input_matrix() const;
    /// Output matrix over [i_l, v_c, i_in].
    Eigen::Matrix<double, 3, 2> output_matrix() const;
    /// Direct feedthrough; nonzero only in the (i_in, d) entry and only in
    /// physical mode.
    Eigen::Matrix<double, 3, 3> feedthrough_matrix() const;

private:
    BuckParams params_;
    OperatingPoint op_;
    Feedthrough mode_;
    Polynomial delta_;
    RationalFunction tf_[3][3];
};

}  // namespace buckstab
