#pragma once

namespace v2gsim {

/// First-order washout s/(1 + T s): a smoothed derivative of its input.
/// Discretised exactly for inputs that vary linearly between samples.
/// With T = 0 it degenerates to a backward difference.
class WashoutDerivative {
public:
    explicit WashoutDerivative(double time_constant = 0.1) : tw_(time_constant) {}

    /// Starts from rest at `input` (output zero).
    void reset(double input) {
        lag_ = input;
        last_ = input;
        output_ = 0.0;
    }

    double update(double input, double dt);

    [[nodiscard]] double output() const { return output_; }
    [[nodiscard]] double time_constant() const { return tw_; }

private:
    double tw_;
    double lag_ = 0.0;
    double last_ = 0.0;
    double output_ = 0.0;
};

/// Local frequency measurement at a bus. Generator terminals read the rotor
/// speed directly; other buses differentiate the voltage angle through the
/// washout. The rate of change is the washout derivative of the deviation.
class FrequencyMeter {
public:
    FrequencyMeter() = default;
    FrequencyMeter(int machine, double washout_tw)
        : machine_(machine), angle_(washout_tw), rate_(washout_tw) {}

    void reset(double theta, double omega_machine);
    void update(double theta, double omega_machine, double dt);

    [[nodiscard]] double df() const { return df_; }      // Hz
    [[nodiscard]] double dfdt() const { return dfdt_; }  // Hz/s
    [[nodiscard]] int machine() const { return machine_; }

private:
    int machine_ = -1;  // machine at this bus, or -1
    WashoutDerivative angle_;
    WashoutDerivative rate_;
    double df_ = 0.0;
    double dfdt_ = 0.0;
};

}  // namespace v2gsim
