#include "statcom/control.hpp"

#include "statcom/modulation.hpp"

#include <cmath>
#include <numbers>

namespace statcom::control {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

double wrap_pi(double x) {
    x = std::fmod(x + kPi, 2.0 * kPi);
    if (x < 0.0) x += 2.0 * kPi;
    return x - kPi;
}

double wrap_2pi(double x) {
    x = std::fmod(x, 2.0 * kPi);
    if (x < 0.0) x += 2.0 * kPi;
    return x;
}

}  // namespace

double pi_step(double error, const PiParams& params, PiState& state, double dt) {
    const double candidate = state.integrator + params.ki * error * dt;
    const double raw = params.kp * error + candidate;
    if (raw > params.out_max) {
        if (!(params.anti_windup && error > 0.0)) state.integrator = candidate;
        return params.out_max;
    }
    if (raw < params.out_min) {
        if (!(params.anti_windup && error < 0.0)) state.integrator = candidate;
        return params.out_min;
    }
    state.integrator = candidate;
    return raw;
}

IqEstimatorState make_iq_estimator(double f_c, double f_s) {
    IqEstimatorState st;
    st.fs = f_s;
    st.alpha = 2.0 * kPi * f_c / f_s;
    if (!(st.alpha > 0.0 && st.alpha < 1.0)) {
        throw ConfigError("iq estimator: alpha = 2*pi*f_c/f_s = " +
                          std::to_string(st.alpha) + " outside (0, 1)");
    }
    return st;
}

void iq_demodulate(double v_m, double theta, IqEstimatorState& state) {
    const double i_sample = v_m * std::cos(theta);
    const double q_sample = v_m * std::sin(theta);
    state.i_bar += state.alpha * (i_sample - state.i_bar);
    state.q_bar += state.alpha * (q_sample - state.q_bar);
    state.i_bar2 += state.alpha * (state.i_bar - state.i_bar2);
    state.q_bar2 += state.alpha * (state.q_bar - state.q_bar2);
}

double amplitude_estimate(const IqEstimatorState& state) {
    return 2.0 * std::hypot(state.i_bar2, state.q_bar2);
}

std::pair<double, double> clarke(double v_a, double v_b, double v_c) {
    const double v_alpha = (2.0 / 3.0) * (v_a - 0.5 * v_b - 0.5 * v_c);
    const double v_beta = (2.0 / 3.0) * (std::sqrt(3.0) / 2.0) * (v_b - v_c);
    return {v_alpha, v_beta};
}

double three_phase_amplitude(double v_alpha, double v_beta) {
    return std::hypot(v_alpha, v_beta);
}

double active_power(double v_g_amp, double i_o_amp, double epsilon) {
    return v_g_amp * i_o_amp * std::sin(epsilon);
}

double vsm_setpoint_estimate(const GridParams& grid, double i_o_amp, bool leading,
                             double a_m_target, std::size_t n_modules) {
    if (!(a_m_target > 0.0 && a_m_target <= 1.0)) {
        throw ConfigError("vsm_setpoint_estimate: a_m_target outside (0, 1]");
    }
    if (n_modules < 1) throw ConfigError("vsm_setpoint_estimate: n_modules < 1");
    const double reactive = grid.omega() * grid.l_g * i_o_amp * (leading ? -1.0 : 1.0);
    const double v_o = std::hypot(grid.v_amp + reactive, grid.r_g * i_o_amp);
    return v_o / (a_m_target * static_cast<double>(n_modules));
}

double io_envelope(double a_m_target, std::size_t n_modules, double v_sm_max,
                   double v_g_max, const GridParams& grid) {
    const double x_l = grid.omega() * grid.l_g;
    if (!(x_l > 0.0)) throw ConfigError("io_envelope: omega * l_g must be positive");
    return (a_m_target * static_cast<double>(n_modules) * v_sm_max - v_g_max) / x_l;
}

double current_reference(double theta_g, double i_ref_amp, double epsilon, bool leading) {
    const double quad = leading ? kHalfPi : -kHalfPi;
    return i_ref_amp * std::sin(theta_g + quad - epsilon);
}

double pll_step(double v_g_sample, double t, PllState& state, const PllConfig& cfg,
                double omega_nominal, double dt) {
    if (cfg.mode == PllConfig::Mode::Ideal) {
        state.omega = omega_nominal;
        state.theta = wrap_2pi(omega_nominal * t);
        return state.theta;
    }
    // SOGI quadrature generator at the tracked frequency. The unforced
    // oscillator is advanced by its exact rotation so the quadrature pair
    // carries no discretization phase bias.
    const double w = state.omega;
    const double e = v_g_sample - state.x1;
    const double x1 = state.x1 + dt * w * cfg.k_sogi * e;  // corrected at time t
    const double x2 = state.x2;

    // For v = V sin(theta) the quadrature state is -V cos(theta).
    const double theta_meas = std::atan2(x1, -x2);
    const double err = wrap_pi(theta_meas - state.theta);
    state.omega += cfg.ki * err * dt;
    const double w_min = 0.8 * omega_nominal;
    const double w_max = 1.2 * omega_nominal;
    if (state.omega < w_min) state.omega = w_min;
    if (state.omega > w_max) state.omega = w_max;
    const double theta_out = wrap_2pi(state.theta + cfg.kp * err * dt);

    // Advance to t + dt for the next sample.
    const double c = std::cos(state.omega * dt);
    const double s = std::sin(state.omega * dt);
    state.x1 = x1 * c - x2 * s;
    state.x2 = x1 * s + x2 * c;
    state.theta = wrap_2pi(theta_out + state.omega * dt);
    return theta_out;
}

void rescale_trims(ControllerState& state, double scale) {
    for (auto& [r1, r2] : state.trim_states) {
        r1 *= scale;
        r2 *= scale;
    }
    state.pi_current.integrator *= scale;
}

ControllerState make_controller_state(const ControllerConfig& cfg, double i_ref_amp,
                                      double a_m_target, bool leading) {
    ControllerState st;
    st.iq = make_iq_estimator(cfg.lpf_cutoff, cfg.rate);
    st.i_ref_amp = i_ref_amp;
    st.a_m_target = a_m_target;
    st.leading = leading;
    st.pll.omega = cfg.grid.omega();
    if (cfg.warm_start) {
        // Start at the expected operating point: grid phase zero, modulation
        // signal in phase with the grid at the target depth.
        st.pll.x1 = 0.0;
        st.pll.x2 = -cfg.grid.v_amp;
        st.iq.i_bar = 0.0;
        st.iq.q_bar = 0.5 * a_m_target;
        st.iq.i_bar2 = 0.0;
        st.iq.q_bar2 = 0.5 * a_m_target;
    }
    return st;
}

ControllerOutput controller_step(const Measurements& meas, double t,
                                 ControllerState& state, const ControllerConfig& cfg) {
    const double dt = 1.0 / cfg.rate;
    const double theta = pll_step(meas.v_g, t, state.pll, cfg.pll, cfg.grid.omega(), dt);
    const double omega = state.pll.omega;

    // Outer modulation-depth loop at the decimated rate. Lagging operation
    // inverts the effect of epsilon on active power, so the error sign
    // follows the lead/lag flag.
    if (state.k % cfg.outer_decimation == 0) {
        const double direction = state.leading ? 1.0 : -1.0;
        const double err = direction * (state.a_m_target - amplitude_estimate(state.iq));
        state.epsilon = pi_step(err, cfg.outer_pi, state.pi_modindex,
                                dt * static_cast<double>(cfg.outer_decimation));
    }

    const double i_ref =
        current_reference(theta, state.i_ref_amp, state.epsilon, state.leading);
    const double error = i_ref - meas.i_o;

    double v_m = pi_step(error, cfg.inner_pi, state.pi_current, dt);
    if (state.trim_states.size() != cfg.trims.size()) {
        state.trim_states.assign(cfg.trims.size(), {0.0, 0.0});
    }
    for (std::size_t n = 0; n < cfg.trims.size(); ++n) {
        // Exact rotation at h*omega keeps the integrator pair neutrally
        // stable even for the higher harmonics, where a forward difference
        // would spiral outward.
        const double phi = static_cast<double>(cfg.trims[n].harmonic) * omega * dt;
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        auto& [r1, r2] = state.trim_states[n];
        const double r1r = r1 * c - r2 * s;
        const double r2r = r1 * s + r2 * c;
        r1 = r1r + dt * cfg.trims[n].gain * error;
        r2 = r2r;
        v_m += r1;
    }
    if (cfg.feedforward) {
        const double quad = state.leading ? kHalfPi : -kHalfPi;
        const double di_ref =
            state.i_ref_amp * omega * std::cos(theta + quad - state.epsilon);
        const double v_o_ff =
            meas.v_g + cfg.grid.l_g * di_ref + cfg.grid.r_g * i_ref;
        const double v_base =
            static_cast<double>(cfg.n_modules) *
            vsm_setpoint_estimate(cfg.grid, state.i_ref_amp, state.leading,
                                  state.a_m_target, cfg.n_modules);
        v_m += v_o_ff / v_base;
    }

    // The estimator sees the modulation signal the PWM actually receives.
    iq_demodulate(modulation::clamp_modulation(v_m).v_m, theta, state.iq);

    ++state.k;
    return {v_m, state.epsilon, i_ref, amplitude_estimate(state.iq), theta};
}

}  // namespace statcom::control
