#include "torso/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "torso/error.hpp"

namespace torso::coupling {

namespace {

struct Deriv {
    double x_dot, x_dd, theta_dot, theta_dd;
};

State advance(const State& s, const Deriv& d, double h) {
    return {s.x + h * d.x_dot, s.x_dot + h * d.x_dd, s.theta + h * d.theta_dot,
            s.theta_dot + h * d.theta_dd, s.t};
}

double drive_force(const State& s, const Params& p) {
    // Controller acts on forward speed; the plant sees the force along +x.
    return -controllers(contact_force(s, p), s.forward_velocity(), p).u;
}

Deriv rhs(const State& s, double h, double u_held, const Params& p, Drive drive) {
    double u = 0.0;
    if (drive == Drive::Held) u = u_held;
    if (drive == Drive::Continuous) u = drive_force(s, p);
    const auto a = derivatives(s, h, u, p);
    return {s.x_dot, a.x_dd, s.theta_dot, a.theta_dd};
}

} // namespace

void Params::validate() const {
    if (!(m > 0.0 && M > 0.0 && l > 0.0 && g > 0.0 && kappa > 0.0))
        throw ConfigError("masses, length, gravity and stiffness must be positive");
    if (!(k_c >= 0.0 && k_d >= 0.0)) throw ConfigError("damping and friction must be non-negative");
}

Accel derivatives(const State& s, double h, double u, const Params& p) {
    if (!(std::abs(s.theta) < std::numbers::pi / 2.0)) throw PendulumFell(s.t, s.theta);
    const double sn = std::sin(s.theta);
    const double cs = std::cos(s.theta);
    const double den = p.M + p.m * sn * sn;
    const double x_dd = (p.m * p.g * sn * cs - p.kappa * p.l * sn * cs * cs -
                         p.m * p.l * s.theta_dot * s.theta_dot * sn - p.k_c * p.l * cs * cs * s.theta_dot +
                         h * cs + u - p.k_d * s.x_dot) /
                        den;
    const double theta_dd = (x_dd * cs + p.g * sn) / p.l -
                            (p.kappa * sn * cs + p.k_c * cs * s.theta_dot) / p.m + h / (p.m * p.l);
    return {x_dd, theta_dd};
}

double contact_force(const State& s, const Params& p) {
    const double f = p.kappa * p.l * std::sin(s.theta) + p.k_c * p.l * std::cos(s.theta) * s.theta_dot;
    return std::max(f, 0.0);
}

ControlOutput controllers(double contact, double x_dot, const Params& p) {
    const double v_ref = p.k_2 * contact;
    return {v_ref, p.k_3 * (v_ref - x_dot)};
}

StepResult step(const State& s, double h, const Params& p, double dt, Drive drive) {
    if (!(dt > 0.0 && dt <= 0.01)) throw InputError("coupling step must lie in (0, 0.01] s");
    StepResult out;
    out.contact = contact_force(s, p);
    const auto ctl = controllers(out.contact, s.forward_velocity(), p);
    out.v_ref = ctl.v_ref;
    out.u = drive == Drive::Off ? 0.0 : ctl.u;
    const double u_plant = -out.u;

    const Deriv k1 = rhs(s, h, u_plant, p, drive);
    out.theta_dd = k1.theta_dd;
    const Deriv k2 = rhs(advance(s, k1, dt / 2.0), h, u_plant, p, drive);
    const Deriv k3 = rhs(advance(s, k2, dt / 2.0), h, u_plant, p, drive);
    const Deriv k4 = rhs(advance(s, k3, dt), h, u_plant, p, drive);

    const double w = dt / 6.0;
    out.next = {s.x + w * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot),
                s.x_dot + w * (k1.x_dd + 2.0 * k2.x_dd + 2.0 * k3.x_dd + k4.x_dd),
                s.theta + w * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot),
                s.theta_dot + w * (k1.theta_dd + 2.0 * k2.theta_dd + 2.0 * k3.theta_dd + k4.theta_dd),
                s.t + dt};
    if (!(std::abs(out.next.theta) < std::numbers::pi / 2.0)) throw PendulumFell(out.next.t, out.next.theta);
    return out;
}

double ForceProfile::total_duration() const {
    double t = 0.0;
    for (const auto& st : stages) t += st.duration;
    return t;
}

double ForceProfile::force_at(double t) const {
    double start = 0.0;
    for (const auto& st : stages) {
        if (t < start + st.duration) return st.force;
        start += st.duration;
    }
    return stages.empty() ? 0.0 : stages.back().force;
}

void ForceProfile::validate(const Params& p) const {
    if (stages.empty()) throw InputError("force profile has no stages");
    for (const auto& st : stages) {
        if (!(st.duration > 0.0)) throw InputError("force stage durations must be positive");
        if (!(st.force >= 0.0 && st.force <= p.h_max + 1e-12))
            throw InputError("force stage outside [0, h_max]");
    }
}

ForceProfile ForceProfile::staircase(double h_max, double dwell, int levels) {
    ForceProfile fp;
    const int top = levels - 1;
    for (int k = 0; k <= top; ++k) fp.stages.push_back({h_max * k / top, dwell});
    for (int k = top - 1; k >= 0; --k) fp.stages.push_back({h_max * k / top, dwell});
    return fp;
}

ForceProfile ForceProfile::constant(double force, double duration) { return {{{force, duration}}}; }

std::vector<Sample> simulate(const ForceProfile& profile, const Params& p, const SimulationOptions& options) {
    p.validate();
    profile.validate(p);
    std::vector<Sample> trace;
    State s = options.initial;
    double stage_start = s.t;
    for (const auto& stage : profile.stages) {
        // Integer step counts keep stage switches on the step grid.
        const auto steps = static_cast<long>(std::llround(stage.duration / options.dt));
        for (long i = 0; i < steps; ++i) {
            auto r = step(s, stage.force, p, options.dt, options.drive);
            trace.push_back({s.t, s, r.contact, r.v_ref, r.u, stage.force, r.theta_dd});
            s = r.next;
            s.t = stage_start + static_cast<double>(i + 1) * options.dt;
        }
        stage_start += static_cast<double>(steps) * options.dt;
    }
    const double c = contact_force(s, p);
    const auto ctl = controllers(c, s.forward_velocity(), p);
    trace.push_back({s.t, s, c, ctl.v_ref, ctl.u, profile.stages.back().force,
                     std::numeric_limits<double>::quiet_NaN()});
    return trace;
}

double average_angular_accel(const std::vector<Sample>& trace) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : trace) {
        if (std::isnan(s.theta_dd)) continue;
        sum += std::abs(s.theta_dd);
        ++n;
    }
    if (n == 0) throw InputError("trace carries no angular accelerations");
    return sum / static_cast<double>(n);
}

double min_stiffness(const Params& p) {
    if (!(p.m > 0.0 && p.g > 0.0 && p.l > 0.0)) throw ConfigError("mass, gravity and length must be positive");
    return p.m * p.g / p.l;
}

double mechanical_energy(const State& s, const Params& p) {
    const double sn = std::sin(s.theta);
    const double kinetic = 0.5 * (p.m + p.M) * s.x_dot * s.x_dot +
                           0.5 * p.m * p.l * p.l * s.theta_dot * s.theta_dot -
                           p.m * p.l * s.theta_dot * s.x_dot * std::cos(s.theta);
    const double potential = p.m * p.g * p.l * std::cos(s.theta) + 0.5 * p.kappa * p.l * p.l * sn * sn;
    return kinetic + potential;
}

StepResponse step_response(const std::vector<Sample>& trace, double t_begin, double t_end) {
    std::vector<double> t;
    std::vector<double> v;
    for (const auto& s : trace)
        if (s.t >= t_begin && s.t < t_end) {
            t.push_back(s.t);
            v.push_back(s.state.forward_velocity());
        }
    if (v.size() < 2) throw InputError("step response window holds fewer than 2 samples");
    const double v0 = v.front();
    const double delta = v.back() - v0;
    StepResponse out;
    if (std::abs(delta) < 1e-12) return out;
    double t10 = -1.0;
    double t90 = -1.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double frac = (v[i] - v0) / delta;
        if (t10 < 0.0 && frac >= 0.1) t10 = t[i];
        if (t90 < 0.0 && frac >= 0.9) t90 = t[i];
        peak = std::max(peak, frac);
    }
    out.rise_time = (t10 >= 0.0 && t90 >= 0.0) ? t90 - t10 : t.back() - t.front();
    out.overshoot = std::max(peak - 1.0, 0.0);
    return out;
}

void SupportGeometry::validate() const {
    if (!(r1 > 0.0 && r2 > 0.0)) throw ConfigError("support bar lengths must be positive");
    if (!(alpha_rest > 0.0 && alpha_rest < std::numbers::pi)) throw ConfigError("rest angle must lie in (0, pi)");
}

SupportPose support_kinematics(double theta_b, const SupportGeometry& geom) {
    geom.validate();
    const double a = geom.alpha_rest + theta_b;
    if (!(a > 0.0 && a < std::numbers::pi)) throw DomainError("support angle leaves (0, pi)");
    auto third_side = [&](double angle) {
        return std::sqrt(geom.r1 * geom.r1 + geom.r2 * geom.r2 - 2.0 * geom.r1 * geom.r2 * std::cos(angle));
    };
    const double r3_rest = third_side(geom.alpha_rest);
    const double r3 = third_side(a);
    const double u = geom.r1 * std::sin(geom.alpha_rest) / r3_rest;
    const double w = -geom.r1 * std::sin(a) / r3;
    if (std::abs(u) > 1.0 || std::abs(w) > 1.0) throw DomainError("support triangle is degenerate");
    return {r3, std::asin(u) + std::asin(w)};
}

std::vector<SupportForcePoint> support_force_curve(double theta_b_min, double theta_b_max, int samples,
                                                   double upper_mass, const SupportGeometry& geom, double g) {
    if (samples < 2) throw InputError("force curve needs at least 2 samples");
    std::vector<SupportForcePoint> out;
    out.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const double tb = theta_b_min + (theta_b_max - theta_b_min) * i / (samples - 1);
        const auto pose = support_kinematics(tb, geom);
        out.push_back({tb, pose.theta, upper_mass * g * std::sin(pose.theta)});
    }
    return out;
}

} // namespace torso::coupling
