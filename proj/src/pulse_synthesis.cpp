#include "stirsap/pulse_synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "stirsap/csv.hpp"
#include "stirsap/errors.hpp"

namespace stirsap {

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::STIRAP: return "stirap";
        case Protocol::STIRSAP: return "stirsap";
        case Protocol::STIRSAP_OPT: return "stirsap_opt";
    }
    return "stirap";
}

std::string to_string(PulseOrdering o) {
    return o == PulseOrdering::S_FIRST ? "s_first" : "p_first";
}

void GaussianStirapParams::validate() const {
    if (!(omega0 > 0.0)) throw ConfigError("pulse: omega0 must be positive");
    if (!(total_time > 0.0)) throw ConfigError("pulse: total_time must be positive");
    const double dtau = resolved_delta_tau();
    if (!(dtau > 0.0 && dtau < total_time / 2.0))
        throw ConfigError("pulse: delta_tau must lie in (0, T/2)");
    if (!(resolved_sigma() > 0.0)) throw ConfigError("pulse: sigma must be positive");
    if (!(sample_step > 0.0)) throw ConfigError("pulse: sample_step must be positive");
}

void ControlParams::validate() const {
    if (!(alpha_p > 0.0) || !(alpha_s > 0.0))
        throw ConfigError("control: amplitude coefficients must be positive");
}

double EnvelopePair::dp(double t) const {
    if (p_deriv) return p_deriv(t);
    const double h = 1e-4;
    return (p_env(t + h) - p_env(t - h)) / (2.0 * h);
}

double EnvelopePair::ds(double t) const {
    if (s_deriv) return s_deriv(t);
    const double h = 1e-4;
    return (s_env(t + h) - s_env(t - h)) / (2.0 * h);
}

bool EnvelopePair::has_analytic_derivatives() const {
    return p_deriv && s_deriv && p_deriv2 && s_deriv2;
}

std::vector<double> PulseSchedule::sample_times() const {
    // tiny slack so an exactly-divisible grid is not truncated by rounding
    const long count = static_cast<long>(std::floor(total_time / sample_step + 1e-9)) + 1;
    std::vector<double> times(count);
    for (long k = 0; k < count; ++k) times[k] = static_cast<double>(k) * sample_step;
    return times;
}

EnvelopePair gaussian_envelopes(const GaussianStirapParams& params) {
    params.validate();
    const double omega0 = params.omega0;
    const double T = params.total_time;
    const double dtau = params.resolved_delta_tau();
    const double sigma = params.resolved_sigma();
    // S_FIRST puts the P peak late (T/2 + dtau); P_FIRST is the printed assignment.
    const double sgn = params.ordering == PulseOrdering::S_FIRST ? 1.0 : -1.0;
    const double p_peak = T / 2.0 + sgn * dtau;
    const double s_peak = T / 2.0 - sgn * dtau;
    const double inv_s2 = 1.0 / (sigma * sigma);

    auto gauss = [omega0, inv_s2](double t, double peak) {
        const double u = t - peak;
        return omega0 * std::exp(-u * u * inv_s2);
    };
    auto dgauss = [inv_s2, gauss](double t, double peak) {
        const double u = t - peak;
        return gauss(t, peak) * (-2.0 * u * inv_s2);
    };
    auto d2gauss = [inv_s2, gauss](double t, double peak) {
        const double u = t - peak;
        return gauss(t, peak) * (4.0 * u * u * inv_s2 * inv_s2 - 2.0 * inv_s2);
    };

    EnvelopePair pair;
    pair.p_env = [gauss, p_peak](double t) { return gauss(t, p_peak); };
    pair.s_env = [gauss, s_peak](double t) { return gauss(t, s_peak); };
    pair.p_deriv = [dgauss, p_peak](double t) { return dgauss(t, p_peak); };
    pair.s_deriv = [dgauss, s_peak](double t) { return dgauss(t, s_peak); };
    pair.p_deriv2 = [d2gauss, p_peak](double t) { return d2gauss(t, p_peak); };
    pair.s_deriv2 = [d2gauss, s_peak](double t) { return d2gauss(t, s_peak); };
    pair.total_time = T;
    pair.sample_step = params.sample_step;
    pair.peak = omega0;
    return pair;
}

double mixing_angle(const EnvelopePair& pair, double t) {
    const double p = pair.p_env(t);
    const double s = pair.s_env(t);
    if (std::abs(p) < 1e-300 && std::abs(s) < 1e-300)
        throw NumericalError("mixing_angle: both envelopes vanish");
    return std::atan2(p, s);
}

double cd_amplitude(const EnvelopePair& pair, double t) {
    const double p = pair.p_env(t);
    const double s = pair.s_env(t);
    const double den = p * p + s * s;
    if (den < 1e-300) return 0.0;
    return (pair.dp(t) * s - p * pair.ds(t)) / den;
}

namespace {

constexpr double taper_fraction = 0.2; // zeta switch window as a fraction of T

double taper_value(double t, double total_time) {
    const double w = taper_fraction * total_time;
    if (t <= 0.0 || t >= total_time) return 0.0;
    if (t < w) return 0.5 * (1.0 - std::cos(M_PI * t / w));
    if (t > total_time - w) return 0.5 * (1.0 - std::cos(M_PI * (total_time - t) / w));
    return 1.0;
}

double taper_slope(double t, double total_time) {
    const double w = taper_fraction * total_time;
    if (t <= 0.0 || t >= total_time) return 0.0;
    if (t < w) return 0.5 * M_PI / w * std::sin(M_PI * t / w);
    if (t > total_time - w) return -0.5 * M_PI / w * std::sin(M_PI * (total_time - t) / w);
    return 0.0;
}

} // namespace

DressedPulses sta_dressed_pulses(const EnvelopePair& pair) {
    const double T = pair.total_time;

    auto cd_fn = [pair](double t) { return cd_amplitude(pair, t); };

    // Bare frame angle; taper pins it to zero at the pulse edges where the Gaussian
    // tail ratio would otherwise leave an O(1) rotation acting on the prepared state.
    auto zeta_bare = [pair, cd_fn](double t) {
        return -std::atan2(2.0 * cd_fn(t), pair.s_env(t));
    };
    auto zeta_fn = [zeta_bare, T](double t) { return taper_value(t, T) * zeta_bare(t); };

    EnvelopeFn zeta_deriv;
    if (pair.has_analytic_derivatives()) {
        zeta_deriv = [pair, T](double t) {
            const double p = pair.p_env(t);
            const double s = pair.s_env(t);
            const double dp = pair.p_deriv(t);
            const double ds = pair.s_deriv(t);
            const double d2p = pair.p_deriv2(t);
            const double d2s = pair.s_deriv2(t);
            const double den = p * p + s * s;
            if (den < 1e-300 || std::abs(s) < 1e-300) return 0.0;
            const double num = dp * s - p * ds;
            const double cd = num / den;
            const double dnum = d2p * s - p * d2s;
            const double dden = 2.0 * (p * dp + s * ds);
            const double dcd = (dnum * den - num * dden) / (den * den);
            const double g = 2.0 * cd / s;
            const double dg = 2.0 * (dcd * s - cd * ds) / (s * s);
            const double zb = -std::atan(g);
            const double dzb = -dg / (1.0 + g * g);
            return taper_slope(t, T) * zb + taper_value(t, T) * dzb;
        };
    } else {
        zeta_deriv = [zeta_fn](double t) {
            const double h = 1e-3;
            return (zeta_fn(t + h) - zeta_fn(t - h)) / (2.0 * h);
        };
    }

    DressedPulses d;
    d.cd = cd_fn;
    d.zeta = zeta_fn;
    d.zeta_deriv = zeta_deriv;
    d.p_tilde = [pair, zeta_deriv](double t) { return pair.p_env(t) - 2.0 * zeta_deriv(t); };
    d.s_tilde = [pair, cd_fn](double t) {
        const double s = pair.s_env(t);
        const double c = cd_fn(t);
        return std::sqrt(s * s + 4.0 * c * c);
    };
    d.total_time = T;
    d.sample_step = pair.sample_step;
    return d;
}

double edge_window(double t, double total_time, double ramp) {
    if (t <= 0.0 || t >= total_time) return 0.0;
    const double r = std::min(ramp, total_time / 2.0);
    if (t < r) return 0.5 * (1.0 - std::cos(M_PI * t / r));
    if (t > total_time - r) return 0.5 * (1.0 - std::cos(M_PI * (total_time - t) / r));
    return 1.0;
}

namespace {

PulseSchedule assemble_schedule(EnvelopeFn p_raw, EnvelopeFn s_raw, const ControlParams& control,
                                const TransmonSpec& spec, double total_time, double sample_step) {
    control.validate();
    spec.validate();
    PulseSchedule sched;
    sched.total_time = total_time;
    sched.sample_step = sample_step;

    const double ap = control.alpha_p;
    const double as = control.alpha_s;
    sched.p_tone.label = 'P';
    sched.p_tone.envelope = [p_raw, ap, total_time](double t) {
        return ap * p_raw(t) * edge_window(t, total_time);
    };
    sched.p_tone.carrier = spec.transition_freq(1) + control.beta_p;
    sched.p_tone.phase = 0.0;
    sched.p_tone.detuning = control.beta_p;

    sched.s_tone.label = 'S';
    sched.s_tone.envelope = [s_raw, as, total_time](double t) {
        return as * s_raw(t) * edge_window(t, total_time);
    };
    sched.s_tone.carrier = spec.transition_freq(2) + control.beta_s;
    sched.s_tone.phase = 0.0;
    sched.s_tone.detuning = control.beta_s;

    if (!(sched.p_tone.carrier > 0.0) || !(sched.s_tone.carrier > 0.0))
        throw ConfigError("schedule: carriers must stay positive");
    return sched;
}

} // namespace

PulseSchedule apply_control_params(const DressedPulses& dressed, const ControlParams& control,
                                   const TransmonSpec& spec) {
    return assemble_schedule(dressed.p_tilde, dressed.s_tilde, control, spec, dressed.total_time,
                             dressed.sample_step);
}

PulseSchedule make_protocol_schedule(Protocol variant, const GaussianStirapParams& params,
                                     const std::optional<ControlParams>& control,
                                     const TransmonSpec& spec) {
    EnvelopePair pair = gaussian_envelopes(params);
    switch (variant) {
        case Protocol::STIRAP:
            return assemble_schedule(pair.p_env, pair.s_env, ControlParams::identity(), spec,
                                     pair.total_time, pair.sample_step);
        case Protocol::STIRSAP:
            return apply_control_params(sta_dressed_pulses(pair), ControlParams::identity(), spec);
        case Protocol::STIRSAP_OPT: {
            if (!control)
                throw ConfigError("make_protocol_schedule: STIRSAP_OPT requires control params");
            return apply_control_params(sta_dressed_pulses(pair), *control, spec);
        }
    }
    throw ConfigError("make_protocol_schedule: unknown variant");
}

void write_envelopes_csv(const std::string& path, const PulseSchedule& schedule) {
    CsvWriter csv(path, {"t_ns", "omega_p", "omega_s"});
    for (double t : schedule.sample_times())
        csv.write_row(std::vector<double>{t, schedule.p_tone.envelope(t), schedule.s_tone.envelope(t)});
}

void write_envelopes_csv(const std::string& path, const PulseSchedule& schedule,
                         const DressedPulses& dressed) {
    CsvWriter csv(path, {"t_ns", "omega_p_tilde", "omega_s_tilde", "omega_cd", "zeta"});
    for (double t : schedule.sample_times()) {
        csv.write_row(std::vector<double>{t, schedule.p_tone.envelope(t),
                                          schedule.s_tone.envelope(t), dressed.cd(t),
                                          dressed.zeta(t)});
    }
}

} // namespace stirsap
