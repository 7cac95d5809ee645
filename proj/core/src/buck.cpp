#include "buckstab/buck.hpp"

#include <cmath>
#include <stdexcept>

namespace buckstab {

void BuckParams::validate() const {
    if (!(v_in > 0.0) || !std::isfinite(v_in))
        throw std::invalid_argument("v_in must be positive");
    if (!(l > 0.0) || !std::isfinite(l))
        throw std::invalid_argument("l must be positive");
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("c must be positive");
    if (r_load && (!(*r_load > 0.0) || !std::isfinite(*r_load)))
        throw std::invalid_argument("r_load must be positive when present");
}

OperatingPoint operating_point(const BuckParams& params, double v_ref,
                               double i_load) {
    params.validate();
    if (v_ref < 0.0)
        throw std::invalid_argument("v_ref must be nonnegative");
    if (!(v_ref < params.v_in))
        throw std::invalid_argument("v_ref must be below v_in; a buck cannot step up");
    OperatingPoint op;
    op.duty = v_ref / params.v_in;
    op.v_c = v_ref;
    op.i_l = params.load_conductance() * v_ref + i_load;
    return op;
}

const char* to_string(Feedthrough mode) {
    return mode == Feedthrough::physical ? "physical" : "paper";
}

BuckSmallSignal::BuckSmallSignal(BuckParams params, OperatingPoint op,
                                 Feedthrough mode)
    : params_(params), op_(op), mode_(mode) {
    params_.validate();
    if (op_.duty < 0.0 || !(op_.duty < 1.0))
        throw std::invalid_argument("operating duty must lie in [0, 1)");

    double l = params_.l;
    double c = params_.c;
    double g = params_.load_conductance();
    double d0 = op_.duty;
    double v = params_.v_in;
    double il0 = op_.i_l;

    delta_ = Polynomial{1.0, l * g, l * c};
    Polynomial cs_g{g, c};
    Polynomial s = Polynomial::monomial(1);

    auto set = [this](BuckOutput o, BuckInput i, RationalFunction f) {
        tf_[static_cast<int>(o)][static_cast<int>(i)] = std::move(f);
    };

    set(BuckOutput::inductor_current, BuckInput::input_voltage,
        RationalFunction(d0 * cs_g, delta_));
    set(BuckOutput::inductor_current, BuckInput::load_current,
        RationalFunction(Polynomial::constant(1.0), delta_));
    set(BuckOutput::inductor_current, BuckInput::duty,
        RationalFunction(v * cs_g, delta_));

    set(BuckOutput::capacitor_voltage, BuckInput::input_voltage,
        RationalFunction(Polynomial::constant(d0), delta_));
    set(BuckOutput::capacitor_voltage, BuckInput::load_current,
        RationalFunction(-l * s, delta_));
    set(BuckOutput::capacitor_voltage, BuckInput::duty,
        RationalFunction(Polynomial::constant(v), delta_));

    set(BuckOutput::input_current, BuckInput::input_voltage,
        RationalFunction(d0 * d0 * cs_g, delta_));
    set(BuckOutput::input_current, BuckInput::load_current,
        RationalFunction(Polynomial::constant(d0), delta_));
    Polynomial iin_d_num = d0 * v * cs_g;
    if (mode_ == Feedthrough::physical) iin_d_num += il0 * delta_;
    set(BuckOutput::input_current, BuckInput::duty,
        RationalFunction(iin_d_num, delta_));
}

const RationalFunction& BuckSmallSignal::transfer(BuckOutput out,
                                                  BuckInput in) const {
    return tf_[static_cast<int>(out)][static_cast<int>(in)];
}

Eigen::Matrix2d BuckSmallSignal::state_matrix() const {
    double l = params_.l;
    double c = params_.c;
    double g = params_.load_conductance();
    Eigen::Matrix2d a;
    a << 0.0, -1.0 / l,
         1.0 / c, -g / c;
    return a;
}

Eigen::Matrix<double, 2, 3> BuckSmallSignal::input_matrix() const {
    double l = params_.l;
    double c = params_.c;
    Eigen::Matrix<double, 2, 3> b;
    b << op_.duty / l, 0.0, params_.v_in / l,
         0.0, -1.0 / c, 0.0;
    return b;
}

Eigen::Matrix<double, 3, 2> BuckSmallSignal::output_matrix() const {
    Eigen::Matrix<double, 3, 2> c;
    c << 1.0, 0.0,
         0.0, 1.0,
         op_.duty, 0.0;
    return c;
}

Eigen::Matrix<double, 3, 3> BuckSmallSignal::feedthrough_matrix() const {
    Eigen::Matrix<double, 3, 3> d = Eigen::Matrix<double, 3, 3>::Zero();
    if (mode_ == Feedthrough::physical)
        d(static_cast<int>(BuckOutput::input_current),
          static_cast<int>(BuckInput::duty)) = op_.i_l;
    return d;
}

}  // namespace buckstab
