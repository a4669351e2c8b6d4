#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stirsap/qudit_model.hpp"
#include "stirsap/types.hpp"

namespace stirsap {

enum class PulseOrdering { S_FIRST, P_FIRST };

enum class Protocol { STIRAP, STIRSAP, STIRSAP_OPT };

std::string to_string(Protocol p);
std::string to_string(PulseOrdering o);

// Gaussian pair geometry. Under S_FIRST (default) the S pulse peaks at T/2 - delta_tau
// and the P pulse at T/2 + delta_tau, so the dark state runs |0> -> |2>; P_FIRST is the
// printed assignment (peaks swapped). Exponent convention: exp(-(t - t_peak)^2 / sigma^2).
struct GaussianStirapParams {
    double omega0 = 0.0;       // rad/ns
    double total_time = 0.0;   // ns
    double delta_tau = 0.0;    // ns; 0 -> default T/11
    double sigma = 0.0;        // ns; 0 -> default 2T/11
    PulseOrdering ordering = PulseOrdering::S_FIRST;
    double sample_step = 0.05; // ns, for envelope exports and serialization

    double resolved_delta_tau() const { return delta_tau > 0.0 ? delta_tau : total_time / 11.0; }
    double resolved_sigma() const { return sigma > 0.0 ? sigma : 2.0 * total_time / 11.0; }
    void validate() const;
};

using EnvelopeFn = std::function<double(double)>;

// Two real envelopes on [0, T] plus (optional) analytic derivatives. When the
// derivative slots are empty, consumers fall back to centered differences.
struct EnvelopePair {
    EnvelopeFn p_env;
    EnvelopeFn s_env;
    EnvelopeFn p_deriv;    // may be null
    EnvelopeFn s_deriv;    // may be null
    EnvelopeFn p_deriv2;   // may be null
    EnvelopeFn s_deriv2;   // may be null
    double total_time = 0.0;
    double sample_step = 0.05;
    double peak = 0.0;     // nominal peak amplitude (Omega_0 for Gaussian input)

    double dp(double t) const;
    double ds(double t) const;
    bool has_analytic_derivatives() const;
};

// Output of the shortcut transform. zeta carries the boundary taper; cd is the raw
// counter-diabatic amplitude dtheta/dt.
struct DressedPulses {
    EnvelopeFn p_tilde;
    EnvelopeFn s_tilde;
    EnvelopeFn zeta;
    EnvelopeFn zeta_deriv;
    EnvelopeFn cd;
    double total_time = 0.0;
    double sample_step = 0.05;
};

// The 4-D CMA-ES search point: amplitude factors and static detunings (rad/ns).
struct ControlParams {
    double alpha_p = 1.0;
    double alpha_s = 1.0;
    double beta_p = 0.0;
    double beta_s = 0.0;

    void validate() const;
    static ControlParams identity() { return {}; }
};

struct DriveTone {
    char label = 'P';          // 'P' or 'S'
    EnvelopeFn envelope;       // rad/ns, already windowed; may be negative (pi flip)
    double carrier = 0.0;      // rad/ns
    double phase = 0.0;        // rad
    double detuning = 0.0;     // rad/ns relative to the labelled transition
};

struct PulseSchedule {
    double total_time = 0.0;
    double sample_step = 0.05;
    DriveTone p_tone;
    DriveTone s_tone;

    std::vector<double> sample_times() const;
};

EnvelopePair gaussian_envelopes(const GaussianStirapParams& params);

// theta(t) = arctan(p/s) in [0, pi/2]; rejects when both envelopes are below 1e-300.
double mixing_angle(const EnvelopePair& pair, double t);

// (dp*s - p*ds)/(p^2 + s^2); returns 0 on a degenerate denominator (< 1e-300).
double cd_amplitude(const EnvelopePair& pair, double t);

// zeta = -arctan(2 cd / s) tapered to zero over [0, T/5] and [T - T/5, T];
// p_tilde = p - 2 zeta_dot; s_tilde = sqrt(s^2 + 4 cd^2).
DressedPulses sta_dressed_pulses(const EnvelopePair& pair);

// Attaches carriers/detunings and the edge window. P carrier = (w1 - w0) + beta_p,
// S carrier = (w2 - w1) + beta_s, phases zero.
PulseSchedule apply_control_params(const DressedPulses& dressed, const ControlParams& control,
                                   const TransmonSpec& spec);

PulseSchedule make_protocol_schedule(Protocol variant, const GaussianStirapParams& params,
                                     const std::optional<ControlParams>& control,
                                     const TransmonSpec& spec);

// Flat-top window, raised-cosine ramps of `ramp` ns at both ends; exactly 0 at t<=0, t>=T.
double edge_window(double t, double total_time, double ramp = 0.5);

// CSV export, %.9e columns. Raw header: t_ns,omega_p,omega_s. With dressed data the
// header becomes t_ns,omega_p_tilde,omega_s_tilde,omega_cd,zeta.
void write_envelopes_csv(const std::string& path, const PulseSchedule& schedule);
void write_envelopes_csv(const std::string& path, const PulseSchedule& schedule,
                         const DressedPulses& dressed);

} // namespace stirsap
