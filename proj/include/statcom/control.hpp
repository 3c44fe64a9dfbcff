#pragma once

#include "statcom/types.hpp"

#include <cstdint>
#include <utility>

namespace statcom::control {

// ---------------------------------------------------------------------------
// PI block with clamped output and conditional anti-windup
// ---------------------------------------------------------------------------

struct PiParams {
    double kp = 0.0;        ///< dimensionless
    double ki = 0.0;        ///< per second
    double out_min = -1.0;
    double out_max = 1.0;
    bool anti_windup = true;
};

struct PiState {
    double integrator = 0.0;
};

/// One PI update. While the output is clamped and the error keeps pushing
/// into the clamp, the integrator is frozen.
double pi_step(double error, const PiParams& params, PiState& state, double dt);

// ---------------------------------------------------------------------------
// Synchronous (I/Q) modulation-index estimator
// ---------------------------------------------------------------------------

struct IqEstimatorState {
    double i_bar = 0.0;   ///< filtered in-phase product
    double q_bar = 0.0;   ///< filtered quadrature product
    double i_bar2 = 0.0;  ///< second filter stage (kills the 2w ripple)
    double q_bar2 = 0.0;
    double alpha = 0.0;   ///< 2*pi*f_c / f_s
    double fs = 0.0;      ///< sampling rate, hertz
};

/// alpha = 2*pi*f_c/f_s must land in (0, 1).
IqEstimatorState make_iq_estimator(double f_c, double f_s);

/// Demodulate one sample of the modulation signal against the grid angle
/// theta and update the recursive low-pass filters.
void iq_demodulate(double v_m, double theta, IqEstimatorState& state);

/// A_m estimate: 2*sqrt(I_bar^2 + Q_bar^2). Valid but biased before the
/// filters have run for about 5/f_c.
double amplitude_estimate(const IqEstimatorState& state);

// ---------------------------------------------------------------------------
// Pure functions: three-phase estimator, power model, design formulas
// ---------------------------------------------------------------------------

/// Amplitude-invariant Clarke transformation (2/3 scaling).
std::pair<double, double> clarke(double v_a, double v_b, double v_c);

/// Amplitude of a balanced set straight from the alpha-beta components.
double three_phase_amplitude(double v_alpha, double v_beta);

/// Small-angle active-power model V_g * I_o * sin(eps). Reporting only; the
/// plant's power emerges from the circuit.
double active_power(double v_g_amp, double i_o_amp, double epsilon);

/// Steady-state module voltage implied by the grid, the commanded reactive
/// current, and the modulation-depth target. Lagging current raises the
/// converter voltage above the grid (|v_g| + w*L*I branch), leading current
/// lowers it.
double vsm_setpoint_estimate(const GridParams& grid, double i_o_amp, bool leading,
                             double a_m_target, std::size_t n_modules);

/// Maximum deliverable reactive current amplitude before the modulation
/// index saturates at the rated module voltage. May be <= 0 when there is
/// no capacitive headroom.
double io_envelope(double a_m_target, std::size_t n_modules, double v_sm_max,
                   double v_g_max, const GridParams& grid);

/// Reactive current reference: amp * sin(theta_g +/- pi/2 - epsilon); the
/// quadrature sign comes from the leading flag.
double current_reference(double theta_g, double i_ref_amp, double epsilon, bool leading);

// ---------------------------------------------------------------------------
// Single-phase PLL (SOGI quadrature + tracking loop)
// ---------------------------------------------------------------------------

struct PllConfig {
    enum class Mode { Ideal, Sogi };
    Mode mode = Mode::Sogi;
    double k_sogi = 1.414;
    double kp = 176.0;      ///< tracking-loop proportional gain, 1/s
    double ki = 15791.0;    ///< tracking-loop integral gain, 1/s^2
};

struct PllState {
    double x1 = 0.0;     ///< in-phase SOGI state
    double x2 = 0.0;     ///< quadrature SOGI state (lags by 90 deg)
    double theta = 0.0;  ///< tracked phase, radians
    double omega = 0.0;  ///< tracked angular frequency, rad/s
};

/// Advance the PLL one sample and return the grid phase estimate. In Ideal
/// mode the analytic phase omega_nominal * t is returned directly.
double pll_step(double v_g_sample, double t, PllState& state, const PllConfig& cfg,
                double omega_nominal, double dt);

// ---------------------------------------------------------------------------
// Dual-loop controller
// ---------------------------------------------------------------------------

/// One generalized integrator tuned to a harmonic of the tracked grid
/// frequency. The fundamental trim removes the residual sinusoidal tracking
/// error the plain PI leaves; higher odd harmonics reject the distortion the
/// conduction drops and capacitor ripple inject into the arm voltage.
struct ResonantTrim {
    std::size_t harmonic = 1;
    double gain = 0.0;
};

struct ControllerConfig {
    double rate = 10000.0;          ///< control sample rate f_s, hertz
    std::size_t outer_decimation = 10;
    double lpf_cutoff = 3.0;        ///< f_c of the I/Q filters, hertz
    double epsilon_max = 0.2;       ///< radians
    PllConfig pll;
    PiParams inner_pi;              ///< amps -> modulation signal
    std::vector<ResonantTrim> trims;
    bool feedforward = true;
    PiParams outer_pi;              ///< modulation-index error -> epsilon
    GridParams grid;                ///< nominal grid parameters (no sensing)
    std::size_t n_modules = 3;
    bool warm_start = true;
};

/// Discrete controller state. Holds the runtime commands (reference
/// amplitude, modulation-depth target, lead/lag flag) so scenario events can
/// retarget a running controller.
struct ControllerState {
    PllState pll;
    PiState pi_current;
    PiState pi_modindex;
    /// One (in-phase, quadrature) integrator pair per configured trim.
    std::vector<std::pair<double, double>> trim_states;
    IqEstimatorState iq;
    double epsilon = 0.0;
    double a_m_target = 0.8;
    double i_ref_amp = 0.0;
    bool leading = false;
    std::uint64_t k = 0;  ///< control step index
};

/// Scale the inner-loop trim states (resonant integrators, PI integrator)
/// when the current reference changes discontinuously: the correction they
/// hold is proportional to the reference, so rescaling it (or negating it on
/// a phase reversal) keeps the trim valid across the step instead of letting
/// a stale correction decay at the trim time constant.
void rescale_trims(ControllerState& state, double scale);

struct ControllerOutput {
    double v_m_raw = 0.0;   ///< modulation signal before the hard clamp
    double epsilon = 0.0;   ///< radians
    double i_ref = 0.0;     ///< amperes, instantaneous reference
    double a_m_hat = 0.0;   ///< current modulation-index estimate
    double theta_g = 0.0;   ///< grid phase used this step
};

/// The only measurements are the grid voltage sample and the output
/// current sample; there is no module-voltage input anywhere.
struct Measurements {
    double v_g = 0.0;
    double i_o = 0.0;
};

ControllerState make_controller_state(const ControllerConfig& cfg, double i_ref_amp,
                                      double a_m_target, bool leading);

/// One pass of the dual-loop controller: PLL, current reference, inner
/// current loop, I/Q demodulation, and (at the decimated rate) the outer
/// modulation-depth loop producing the phase offset.
ControllerOutput controller_step(const Measurements& meas, double t,
                                 ControllerState& state, const ControllerConfig& cfg);

}  // namespace statcom::control
