#include "torso/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "torso/error.hpp"

namespace torso::harness {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Zone {
    double lo = 0.0;
    double hi = 0.0;
};

Zone zone_of(PostureCategory c, const SyntheticUser& user) {
    const auto beta = user.beta();
    const int k = static_cast<int>(c);
    Zone z{k == 0 ? user.layout.s.front() : beta[k - 1], k == kPostureCount - 1 ? user.layout.s.back() : beta[k]};
    z.lo += user.zone_margin;
    z.hi -= user.zone_margin;
    return z;
}

void fnv_mix(std::uint64_t& h, double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
}

std::uint64_t hash_params(const CalibrationProfile& p, const MappingParams& m) {
    std::uint64_t h = 14695981039346656037ULL;
    for (double v : p.zero_offsets) fnv_mix(h, v);
    for (double v : p.alpha) fnv_mix(h, v);
    for (double v : p.beta) fnv_mix(h, v);
    for (double v : p.f1_coeffs) fnv_mix(h, v);
    for (double v : {p.theta_offset_deg, p.p_max, m.theta_ft, m.theta_fm_default, m.theta_fst, m.theta_bt,
                     m.theta_bm, m.theta_bst, m.rho, m.w_v_back, m.v_max, m.w_max, m.k_v_d, m.k_w_d,
                     m.contact_threshold, m.literal_eq12 ? 1.0 : 0.0})
        fnv_mix(h, v);
    return h;
}

// Curvature the forward mapping produces at `cop`; + is a left turn.
double curvature_at(double cop, const Boundaries& beta, const MappingParams& params) {
    const auto w = weights(cop, beta, params.literal_eq12);
    if (w.w_v <= 0.0) return w.w_w < 0.0 ? kInf : -kInf;
    return -params.w_max * w.w_w / (params.v_max * w.w_v);
}

} // namespace

Boundaries SyntheticUser::beta() const {
    Boundaries b{};
    for (int k = 0; k < 4; ++k) b[k] = 0.5 * (delta_ref[k] + delta_ref[k + 1]);
    return b;
}

void SyntheticUser::validate() const {
    layout.validate();
    circuit.validate();
    if (alpha.size() != layout.n() || baseline.size() != layout.n())
        throw ConfigError("synthetic user vectors do not match sensor count");
    for (double a : alpha)
        if (!(a > 0.0)) throw ConfigError("synthetic sensitivities must be positive");
    for (double b : baseline)
        if (!(b >= 0.0)) throw ConfigError("synthetic baselines must be non-negative");
    for (int k = 0; k < kPostureCount; ++k) {
        if (!(delta_ref[k] > layout.s.front() && delta_ref[k] < layout.s.back()))
            throw ConfigError("synthetic posture COPs must lie inside the sensor span");
        if (k > 0 && !(delta_ref[k] > delta_ref[k - 1]))
            throw ConfigError("synthetic posture COPs must be strictly increasing");
        if (!(theta_fm_deg[k] > 0.0)) throw ConfigError("synthetic maximum bend angles must be positive");
    }
    if (!(press > 0.0)) throw ConfigError("synthetic press must be positive");
    if (!(zone_margin >= 0.0) || !(noise_lambda_rel >= 0.0) || !(noise_theta_deg >= 0.0))
        throw ConfigError("margins and noise levels must be non-negative");
    for (int k = 0; k < kPostureCount; ++k) {
        const auto z = zone_of(static_cast<PostureCategory>(k), *this);
        if (!(delta_ref[k] >= z.lo && delta_ref[k] <= z.hi))
            throw ConfigError("synthetic posture COP falls inside the zone margin");
    }
}

std::vector<double> SyntheticUser::pressure_pattern(double cop) const {
    const auto& s = layout.s;
    if (!(cop >= s.front() && cop <= s.back())) throw InputError("COP outside the sensor span");
    std::vector<double> p(s.size(), 0.0);
    auto it = std::lower_bound(s.begin(), s.end(), cop);
    const auto hi = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - s.begin(), 1));
    const std::size_t lo = hi - 1;
    const bool lo_near = cop - s[lo] <= s[hi] - cop;
    const std::size_t near = lo_near ? lo : hi;
    const std::size_t other = lo_near ? hi : lo;
    p[near] = press;
    p[other] = press * (cop - s[near]) / (s[other] - cop);
    return p;
}

SensorFrame SyntheticUser::frame(double t, std::span<const double> pressure, double theta_b_deg,
                                 std::mt19937_64* rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    SensorFrame f;
    f.t = t;
    f.raw.resize(layout.n());
    const double counts = circuit.full_scale / circuit.conductance_full;
    for (std::size_t i = 0; i < layout.n(); ++i) {
        double reading = pressure[i] / alpha[i];
        if (rng && noise_lambda_rel > 0.0) reading *= 1.0 + noise_lambda_rel * gauss(*rng);
        const double g = baseline[i] + std::max(reading, 0.0);
        f.raw[i] = std::clamp(std::round(g * counts), 0.0, circuit.full_scale);
    }
    f.theta_b_deg = theta_rest_deg + theta_b_deg;
    if (rng && noise_theta_deg > 0.0) f.theta_b_deg += noise_theta_deg * gauss(*rng);
    return f;
}

CalibrationProfile SyntheticUser::ideal_profile(double theta_fm_default_deg) const {
    validate();
    auto p = CalibrationProfile::identity(layout);
    p.circuit = circuit;
    p.zero_offsets = baseline;
    p.theta_offset_deg = theta_rest_deg;
    for (std::size_t i = 0; i < layout.n(); ++i) p.alpha[i] = alpha[i] * p.p_max / press;
    p.delta_ref = delta_ref;
    p.beta = beta();
    p.theta_fm_per_posture = theta_fm_deg;
    std::array<double, kPostureCount> k{};
    for (int i = 0; i < kPostureCount; ++i) k[i] = theta_fm_deg[i] / theta_fm_default_deg;
    p.f1_coeffs = fit_quadratic(delta_ref, k);
    p.validate();
    return p;
}

double cop_for_intent(const Intent& intent, const SyntheticUser& user) {
    const auto z = zone_of(intent.category, user);
    const double c = user.delta_ref[static_cast<int>(intent.category)];
    const double b = std::clamp(intent.bias, -1.0, 1.0);
    return b < 0.0 ? c + b * (c - z.lo) : c + b * (z.hi - c);
}

Intent intent_for_cop(double cop, double intensity, const SyntheticUser& user) {
    Intent out;
    out.category = classify_posture(cop, user.beta());
    out.intensity = std::clamp(intensity, 0.0, 1.0);
    const auto z = zone_of(out.category, user);
    const double c = user.delta_ref[static_cast<int>(out.category)];
    if (cop < c)
        out.bias = c > z.lo ? (cop - c) / (c - z.lo) : -1.0;
    else
        out.bias = z.hi > c ? (cop - c) / (z.hi - c) : 1.0;
    out.bias = std::clamp(out.bias, -1.0, 1.0);
    return out;
}

SensorFrame synthesize_frame(const Intent& intent, const SyntheticUser& user, double theta_fm_budget_deg,
                             const MappingParams& params, double t, std::mt19937_64* rng) {
    if (!(intent.intensity >= 0.0 && intent.intensity <= 1.0))
        throw InputError("intent intensity must lie in [0, 1]");
    if (intent.intensity == 0.0) {
        const std::vector<double> none(user.layout.n(), 0.0);
        return user.frame(t, none, 0.0, rng);
    }
    const auto pressure = user.pressure_pattern(cop_for_intent(intent, user));
    const double theta = params.theta_ft + intent.intensity * (theta_fm_budget_deg - params.theta_ft);
    return user.frame(t, pressure, theta, rng);
}

std::vector<SensorFrame> record_calibration(const SyntheticUser& user, const CalibrationProtocol& protocol,
                                            std::mt19937_64* rng) {
    user.validate();
    if (!(protocol.sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
    const double dt = 1.0 / protocol.sample_rate_hz;
    MappingParams params;
    std::vector<SensorFrame> out;
    const auto neutral_n = static_cast<long>(std::llround(protocol.neutral_s * protocol.sample_rate_hz));
    const auto dwell_n = static_cast<long>(std::llround(protocol.dwell_s * protocol.sample_rate_hz));
    long tick = 0;
    for (long i = 0; i < neutral_n; ++i, ++tick)
        out.push_back(synthesize_frame({}, user, params.theta_fm_default, params, tick * dt, rng));
    for (auto c : protocol.sequence()) {
        const Intent intent{c, 1.0, 0.0};
        const double budget = user.theta_fm_deg[static_cast<int>(c)];
        for (long i = 0; i < dwell_n; ++i, ++tick)
            out.push_back(synthesize_frame(intent, user, budget, params, tick * dt, rng));
    }
    return out;
}

PostureCalibrationResult calibrate_user(const SyntheticUser& user, const CalibrationProtocol& protocol,
                                        double theta_fm_default_deg, std::mt19937_64* rng) {
    const auto frames = record_calibration(user, protocol, rng);
    const auto seg = segment_recording(frames, protocol);
    const auto neutral = calibrate_neutral(seg.neutral, user.circuit, protocol.sample_rate_hz);
    PostureCalibrationOptions opts;
    opts.theta_fm_default_deg = theta_fm_default_deg;
    opts.sample_rate_hz = protocol.sample_rate_hz;
    return calibrate_postures(seg.dwells, neutral, user.layout, user.circuit, opts);
}

double intensity_for_speed(double speed, const MappingParams& params) {
    const double p = std::clamp(speed / params.v_max, 0.0, 1.0);
    const double k_amp = 1.0 / (params.rho * (2.0 - params.rho));
    return std::clamp((1.0 - std::sqrt(std::max(1.0 - p / k_amp, 0.0))) / params.rho, 0.0, 1.0);
}

double cop_for_curvature(double curvature, const Boundaries& beta, const MappingParams& params) {
    validate_boundaries(beta);
    if (curvature == 0.0) return 0.5 * (beta[1] + beta[2]);
    // Curvature is monotone inside either turn zone, so bisect on it.
    double lo = curvature > 0.0 ? beta[0] : beta[2];
    double hi = curvature > 0.0 ? beta[1] : beta[3];
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double c = curvature_at(mid, beta, params);
        // Left zone: curvature falls from +inf to 0; right zone: from 0 to -inf.
        if (c > curvature)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

DriverOutput virtual_driver(const vehicle::Pose& pose, const vehicle::PathSpec& path,
                            vehicle::ProgressTracker& tracker, const DriverParams& driver,
                            const CalibrationProfile& profile, const MappingParams& params,
                            const SyntheticUser& user) {
    if (!(driver.lookahead > 0.0)) throw ConfigError("lookahead must be positive");
    DriverOutput out;
    const vehicle::Point p{pose.x, pose.y};
    const std::size_t j = tracker.update(p);
    const auto& wp = path.waypoints[j];
    if (std::hypot(wp.x - p.x, wp.y - p.y) > driver.recovery_radius) {
        out.abort = true;
        return out;
    }
    const std::size_t ahead = std::max(j, tracker.index());
    out.lookahead_point = path.point_at(path.arc_length[ahead] + driver.lookahead);
    const double dx = out.lookahead_point.x - p.x;
    const double dy = out.lookahead_point.y - p.y;
    const double dist = std::hypot(dx, dy);
    out.heading_error = dist > 1e-9 ? vehicle::normalize_angle(std::atan2(dy, dx) - pose.heading) : 0.0;

    const double intensity = driver.target_speed ? intensity_for_speed(*driver.target_speed, params)
                                                 : driver.cruise_intensity;
    if (std::abs(out.heading_error) >= kPi / 2.0) {
        // Facing away from the path: spin in place toward it.
        out.intent = {out.heading_error > 0.0 ? PostureCategory::SpinCCW : PostureCategory::SpinCW, intensity,
                      out.heading_error > 0.0 ? -1.0 : 1.0};
        out.target_cop = cop_for_intent(out.intent, user);
        return out;
    }
    const double curvature = 2.0 * std::sin(out.heading_error) / std::max(dist, 1e-6);
    out.target_cop = cop_for_curvature(curvature, profile.beta, params);
    out.intent = intent_for_cop(out.target_cop, intensity, user);
    return out;
}

void ScenarioConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (!(duration_cap > 0.0)) throw ConfigError("duration cap must be positive");
    if (!(straight_len > 0.0) || !(radius > 0.0)) throw ConfigError("course dimensions must be positive");
    if (name != "figure8" && name != "circle") throw ConfigError("unknown course: " + name);
    if (!(driver.lookahead > 0.0)) throw ConfigError("lookahead must be positive");
    if (!(driver.recovery_radius > 0.0)) throw ConfigError("recovery radius must be positive");
    if (!(driver.cruise_intensity > 0.0 && driver.cruise_intensity <= 1.0))
        throw ConfigError("cruise intensity must lie in (0, 1]");
    if (driver.target_speed && !(*driver.target_speed > 0.0)) throw ConfigError("target speed must be positive");
    if (!calibrate && profile) profile->validate();
    mapping.validate();
    user.validate();
}

ScenarioConfig default_scenario() {
    ScenarioConfig c;
    c.user.alpha = {1.2, 0.9, 1.0, 1.1, 0.85};
    c.user.baseline = {0.04, 0.06, 0.05, 0.05, 0.03};
    c.user.theta_rest_deg = 1.5;
    c.user.noise_lambda_rel = 0.02;
    c.user.noise_theta_deg = 0.3;
    return c;
}

std::string_view to_string(RunStatus s) {
    switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Aborted: return "aborted";
    case RunStatus::Timeout: return "timeout";
    }
    return "unknown";
}

RunResult run_closed_loop(const ScenarioConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const auto path = config.name == "circle" ? vehicle::build_circle(config.radius)
                                              : vehicle::build_figure8(config.straight_len, config.radius);
    RunResult out;
    if (config.calibrate)
        out.profile = calibrate_user(config.user, config.protocol, config.mapping.theta_fm_default, &rng).profile;
    else
        out.profile = config.profile ? *config.profile : config.user.ideal_profile(config.mapping.theta_fm_default);
    out.params_hash = hash_params(out.profile, config.mapping);

    PipelineSession session(out.profile, config.mapping);
    vehicle::ProgressTracker tracker(path);
    vehicle::CompletionMonitor monitor(path);
    vehicle::Pose pose{path.start().x, path.start().y, path.start_heading()};

    out.trace.scenario = config.name;
    out.trace.params_hash = out.params_hash;
    out.trace.samples.push_back({0.0, pose, 0.0, 0.0});
    const auto ticks = static_cast<long>(std::ceil(config.duration_cap / config.dt - 1e-9));
    for (long i = 1; i <= ticks; ++i) {
        const double t = static_cast<double>(i) * config.dt;
        const auto d = virtual_driver(pose, path, tracker, config.driver, out.profile, config.mapping, config.user);
        if (d.abort) {
            out.status = RunStatus::Aborted;
            break;
        }
        const double budget = forward_max_angle(d.target_cop, out.profile, config.mapping);
        const auto frame = synthesize_frame(d.intent, config.user, budget, config.mapping, t, &rng);
        const auto r = session.tick(frame, config.dt);
        if (r.raw.gate == Gate::SafetyStop) ++out.safety_stops;
        if (r.raw.gate == Gate::NoContact) ++out.no_contact_ticks;
        pose = vehicle::integrate_unicycle(pose, r.command.v, r.command.w, config.dt);
        out.trace.samples.push_back({t, pose, r.command.v, r.command.w});
        if (monitor.update(t, {pose.x, pose.y})) {
            out.status = RunStatus::Completed;
            break;
        }
    }
    out.metrics = vehicle::evaluate(out.trace, path);
    return out;
}

std::vector<VelocityPoint> velocity_space_sweep(const CalibrationProfile& profile, const MappingParams& params,
                                                int cop_steps, int bend_steps) {
    if (cop_steps < 10 || bend_steps < 10) throw InputError("sweep resolution must be at least 10x10");
    profile.validate();
    params.validate();
    const double s_lo = profile.layout.s.front();
    const double s_hi = profile.layout.s.back();
    double theta_hi = params.theta_bm;
    for (int i = 0; i < cop_steps; ++i)
        theta_hi = std::max(theta_hi,
                            forward_max_angle(s_lo + (s_hi - s_lo) * i / (cop_steps - 1), profile, params));
    std::vector<VelocityPoint> out;
    out.reserve(static_cast<std::size_t>(cop_steps) * static_cast<std::size_t>(bend_steps));
    for (int i = 0; i < cop_steps; ++i) {
        const double cop = s_lo + (s_hi - s_lo) * i / (cop_steps - 1);
        const double theta_fm = forward_max_angle(cop, profile, params);
        for (int j = 0; j < bend_steps; ++j) {
            const double theta = params.theta_bm + (theta_hi - params.theta_bm) * j / (bend_steps - 1);
            const auto mag = magnitude(theta, theta_fm, params);
            const auto cmd = command(mag, cop, profile.beta, params);
            out.push_back({cmd.v / params.v_max, cmd.w / params.w_max, mag.context});
        }
    }
    return out;
}

StiffnessRow stiffness_run(double kappa, const StiffnessStudyConfig& config) {
    if (!(kappa > 0.0)) throw InputError("stiffness values must be positive");
    auto p = config.params;
    p.kappa = kappa;
    StiffnessRow row;
    row.kappa = kappa;
    try {
        const auto trace = coupling::simulate(config.profile, p, config.sim);
        row.a_aa = coupling::average_angular_accel(trace);
        double start = config.sim.initial.t;
        for (const auto& st : config.profile.stages) {
            if (st.force > 0.0) {
                const auto r = coupling::step_response(trace, start, start + st.duration);
                row.rise_time = r.rise_time;
                row.overshoot = r.overshoot;
                break;
            }
            start += st.duration;
        }
    } catch (const PendulumFell& e) {
        row.fell = true;
        row.fell_at = e.time();
        row.a_aa = std::numeric_limits<double>::quiet_NaN();
        row.rise_time = std::numeric_limits<double>::quiet_NaN();
        row.overshoot = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

std::vector<StiffnessRow> stiffness_study(const std::vector<double>& kappas, const StiffnessStudyConfig& config) {
    std::vector<StiffnessRow> out;
    out.reserve(kappas.size());
    for (double k : kappas) out.push_back(stiffness_run(k, config));
    return out;
}

} // namespace torso::harness
