#include "v2gsim/frequency.hpp"

#include <cmath>
#include <numbers>

namespace v2gsim {

double WashoutDerivative::update(double input, double dt) {
    if (dt <= 0.0) {
        return output_;
    }
    double slope = (input - last_) / dt;
    if (tw_ <= 0.0) {
        lag_ = input;
        output_ = slope;
    } else {
        double decay = std::exp(-dt / tw_);
        lag_ = input - tw_ * slope + (lag_ - last_ + tw_ * slope) * decay;
        output_ = (input - lag_) / tw_;
    }
    last_ = input;
    return output_;
}

void FrequencyMeter::reset(double theta, double omega_machine) {
    angle_.reset(theta);
    df_ = machine_ >= 0 ? omega_machine / (2.0 * std::numbers::pi) : 0.0;
    rate_.reset(df_);
    dfdt_ = 0.0;
}

void FrequencyMeter::update(double theta, double omega_machine, double dt) {
    double rad_per_s = angle_.update(theta, dt);
    df_ = (machine_ >= 0 ? omega_machine : rad_per_s) / (2.0 * std::numbers::pi);
    dfdt_ = rate_.update(df_, dt);
}

}  // namespace v2gsim
