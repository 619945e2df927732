#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ramanhom/errors.hpp"

namespace ramanhom {

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = 0.0;  // 0 = unlimited
};

// Dormand-Prince 5(4) embedded Runge-Kutta stepper with 4th-order dense
// output (Hairer's DOPRI5 continuous extension). State is any Eigen vector or
// matrix type with elementwise cwiseAbs(). Step size is controlled by the
// usual mixed absolute/relative RMS error norm.
template <class State>
class Dopri5 {
  public:
    template <class RHS>
    Dopri5(RHS&& f, double t0, const State& y0, const IntegratorOptions& opt)
        : t_(t0), y_(y0), opt_(opt) {
        k1_ = f(t0, y0);
        h_ = initial_step(f);
    }

    double time() const { return t_; }
    double step_size() const { return h_; }
    const State& state() const { return y_; }
    double previous_time() const { return t_prev_; }
    double previous_step() const { return t_ - t_prev_; }

    void limit_step(double h_max) { h_ = std::min(h_, h_max); }

    // Advances by one accepted adaptive step, not beyond t_end.
    template <class RHS>
    void step(RHS&& f, double t_end) {
        constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0;
        constexpr double a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0;
        constexpr double a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0;
        constexpr double a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0;
        constexpr double e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        bool rejected = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            double h = std::min(h_, t_end - t_);
            if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
            if (!(h > 0.0)) throw propagation_error("integrator: nonpositive step at t = " + std::to_string(t_));
            // Strictly below the span guard used by the driver loops, so an
            // end-of-interval rounding residue can never trip it.
            if (h < std::max(2.5e-19, 2.0 * 2.220446049250313e-16 * std::abs(t_)))
                throw propagation_error("integrator: step underflow at t = " + std::to_string(t_));

            const State k2 = f(t_ + c2 * h, y_ + h * (a21 * k1_));
            const State k3 = f(t_ + c3 * h, y_ + h * (a31 * k1_ + a32 * k2));
            const State k4 = f(t_ + c4 * h, y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3));
            const State k5 = f(t_ + c5 * h, y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
            const State k6 = f(t_ + h, y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const State y_new = y_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            const State k7 = f(t_ + h, y_new);
            const State err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double enorm = error_norm(err, y_, y_new);
            if (enorm <= 1.0) {
                const double grow = rejected ? 1.0 : 10.0;
                const double fac = std::clamp(0.9 * std::pow(std::max(enorm, 1e-10), -0.2), 0.2, grow);
                t_prev_ = t_;
                y_prev_ = y_;
                k1_prev_ = k1_;
                k3_ = k3; k4_ = k4; k5_ = k5; k6_ = k6; k7_ = k7;
                h_prev_ = h;
                t_ += h;
                y_ = y_new;
                k1_ = k7;  // FSAL
                h_ = h * fac;
                dense_ready_ = false;
                return;
            }
            rejected = true;
            h_ = h * std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.9);
        }
        throw propagation_error("integrator: too many step rejections at t = " + std::to_string(t_));
    }

    // Interpolates the solution inside the last accepted step.
    State dense_eval(double t) {
        if (!dense_ready_) prepare_dense();
        const double theta = (t - t_prev_) / h_prev_;
        return y_prev_ + theta * (r2_ + (1.0 - theta) * (r3_ + theta * (r4_ + (1.0 - theta) * r5_)));
    }

  private:
    void prepare_dense() {
        constexpr double d1 = -12715105075.0 / 11282082432.0;
        constexpr double d3 = 87487479700.0 / 32700410799.0;
        constexpr double d4 = -10690763975.0 / 1880347072.0;
        constexpr double d5 = 701980252875.0 / 199316789632.0;
        constexpr double d6 = -1453857185.0 / 822651844.0;
        constexpr double d7 = 69997945.0 / 29380423.0;
        const State dy = y_ - y_prev_;
        r2_ = dy;
        r3_ = h_prev_ * k1_prev_ - dy;
        r4_ = dy - h_prev_ * k7_ - r3_;
        r5_ = h_prev_ * (d1 * k1_prev_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
        dense_ready_ = true;
    }

    double error_norm(const State& err, const State& y0, const State& y1) const {
        const auto scale = (opt_.atol + opt_.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array());
        return std::sqrt((err.cwiseAbs().array() / scale).square().mean());
    }

    template <class RHS>
    double initial_step(RHS&& f) {
        const double d0 = std::sqrt(y_.cwiseAbs().array().square().mean());
        const double d1 = std::sqrt(k1_.cwiseAbs().array().square().mean());
        double h = (d1 > 1e-30) ? 0.01 * (opt_.atol + opt_.rtol * d0) / (opt_.rtol * d1 + 1e-300) : 1e-10;
        (void)f;
        if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
        return std::clamp(h, 1e-13, 1.0);
    }

    double t_ = 0.0;
    State y_;
    State k1_;
    IntegratorOptions opt_;
    double h_ = 0.0;

    double t_prev_ = 0.0, h_prev_ = 0.0;
    State y_prev_, k1_prev_, k3_, k4_, k5_, k6_, k7_;
    bool dense_ready_ = false;
    State r2_, r3_, r4_, r5_;
};

// Integrates f over [t0, t1] and calls observer(t, y) at each requested
// sample time (sorted, within [t0, t1]; dense output between steps).
template <class State, class RHS, class Iter, class Observer>
State integrate_sampled(RHS&& f, double t0, double t1, const State& y0,
                        const IntegratorOptions& opt, Iter sample_begin, Iter sample_end,
                        Observer&& observer) {
    Iter next = sample_begin;
    while (next != sample_end && *next <= t0) {
        observer(*next, y0);
        ++next;
    }
    if (t1 <= t0) return y0;

    // Stop once the remaining span is below a few ulps of t1 to avoid
    // spinning on rounding residue.
    const double t_eps = std::max(8.0 * 2.220446049250313e-16 * std::max(std::abs(t0), std::abs(t1)), 1e-30);
    Dopri5<State> stepper(f, t0, y0, opt);
    while (t1 - stepper.time() > t_eps) {
        stepper.step(f, t1);
        while (next != sample_end && *next <= stepper.time() + t_eps) {
            observer(*next, stepper.dense_eval(std::min(*next, stepper.time())));
            ++next;
        }
    }
    while (next != sample_end && *next <= t1 + t_eps) {
        observer(*next, stepper.state());
        ++next;
    }
    return stepper.state();
}

template <class State, class RHS>
State integrate_to(RHS&& f, double t0, double t1, const State& y0, const IntegratorOptions& opt) {
    const double* none = nullptr;
    return integrate_sampled(f, t0, t1, y0, opt, none, none, [](double, const State&) {});
}

}  // namespace ramanhom
