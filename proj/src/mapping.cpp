#include "torso/mapping.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "torso/error.hpp"

namespace torso {

namespace {

constexpr double kPi = std::numbers::pi;

// Parabolic ramp from the threshold (P = 0) to the maximum (P = 1).
double parabolic_ramp(double theta, double threshold, double maximum, double rho) {
    const double p_m = (maximum - threshold) / rho;
    const double vertex = p_m + threshold;
    const double k_n = 1.0 / (p_m * p_m);
    const double k_amp = 1.0 / (rho * (2.0 - rho));
    const double d = theta - vertex;
    return k_amp * (1.0 - k_n * d * d);
}

double h1(double bi, double bj, double cop) {
    return 0.5 * std::sin(kPi / (bi - bj) * (cop - bj) + kPi / 2.0);
}

double h2(double bi, double bj, double cop) {
    return 0.5 * std::sin(kPi / (bi - bj) * (cop - bi) + kPi / 2.0);
}

} // namespace

void MappingParams::validate() const {
    if (!(theta_bst < theta_bm && theta_bm < theta_bt && theta_bt < 0.0 && 0.0 < theta_ft &&
          theta_ft < theta_fm_default && theta_fm_default < theta_fst))
        throw ConfigError("bending thresholds must satisfy BST < BM < BT < 0 < FT < FM < FST");
    if (!(rho > 0.0 && rho < 2.0)) throw ConfigError("rho must lie in (0, 2)");
    if (!(w_v_back >= -1.0 && w_v_back < 0.0)) throw ConfigError("backward weight must lie in [-1, 0)");
    if (!(v_max > 0.0) || !(w_max > 0.0)) throw ConfigError("velocity limits must be positive");
    if (!(k_v_d >= -1.0 && k_v_d < 0.0) || !(k_w_d >= -1.0 && k_w_d < 0.0))
        throw ConfigError("smoothing coefficients must lie in [-1, 0)");
}

std::string_view to_string(BendContext c) {
    static constexpr std::array<std::string_view, 4> names{"Dead", "Forward", "Backward", "Safety"};
    return names[static_cast<int>(c)];
}

std::string_view to_string(Gate g) {
    static constexpr std::array<std::string_view, 3> names{"Normal", "SafetyStop", "NoContact"};
    return names[static_cast<int>(g)];
}

Gate gate_from_string(std::string_view name) {
    if (name == "Normal") return Gate::Normal;
    if (name == "SafetyStop") return Gate::SafetyStop;
    if (name == "NoContact") return Gate::NoContact;
    throw InputError("unknown gate: " + std::string(name));
}

Magnitude magnitude(double theta_b, double theta_fm, const MappingParams& params) {
    if (!(theta_fm > params.theta_ft))
        throw ConfigError("forward maximum angle must exceed the forward threshold");
    if (theta_fm > params.theta_fst)
        throw ConfigError("forward maximum angle must not exceed the safety threshold");
    if (!std::isfinite(theta_b)) throw InputError("non-finite bending angle");

    if (theta_b > params.theta_fst || theta_b < params.theta_bst) return {0.0, BendContext::Safety};
    if (theta_b > params.theta_ft) {
        const double p = parabolic_ramp(std::min(theta_b, theta_fm), params.theta_ft, theta_fm, params.rho);
        return {std::clamp(p, 0.0, 1.0), BendContext::Forward};
    }
    if (theta_b < params.theta_bt) {
        const double p =
            parabolic_ramp(std::max(theta_b, params.theta_bm), params.theta_bt, params.theta_bm, params.rho);
        return {std::clamp(p, 0.0, 1.0), BendContext::Backward};
    }
    return {0.0, BendContext::Dead};
}

double forward_max_angle(double cop, const CalibrationProfile& profile, const MappingParams& params) {
    const double theta = eval_f1(cop, profile.f1_coeffs) * params.theta_fm_default;
    return std::min(theta, params.theta_fst);
}

Weights weights(double cop, const Boundaries& beta, bool literal_eq12) {
    validate_boundaries(beta);
    const auto [b1, b2, b3, b4] = beta;
    if (cop < b1) return {0.0, -1.0};
    if (cop < b2) return {0.5 + h1(b1, b2, cop), -0.5 - h2(b1, b2, cop)};
    if (cop < b3) return {1.0, 0.0};
    if (cop < b4) {
        const double w_w = literal_eq12 ? 0.5 + h2(b3, b4, cop) : 0.5 - h2(b3, b4, cop);
        return {0.5 - h1(b3, b4, cop), w_w};
    }
    return {0.0, 1.0};
}

VelocityCommand command(const Magnitude& mag, double cop, const Boundaries& beta,
                        const MappingParams& params) {
    switch (mag.context) {
    case BendContext::Safety:
        return {0.0, 0.0, Gate::SafetyStop};
    case BendContext::Dead:
        return {0.0, 0.0, Gate::Normal};
    case BendContext::Backward: {
        const double v = params.v_max * mag.p * params.w_v_back;
        return {std::clamp(v, -params.v_max, params.v_max), 0.0, Gate::Normal};
    }
    case BendContext::Forward: {
        const auto w = weights(cop, beta, params.literal_eq12);
        const double v = params.v_max * mag.p * w.w_v;
        const double yaw = params.w_max * mag.p * w.w_w;
        return {std::clamp(v, -params.v_max, params.v_max), std::clamp(yaw, -params.w_max, params.w_max),
                Gate::Normal};
    }
    }
    return {};
}

VelocityCommand smooth(const VelocityCommand& cmd, const VelocityCommand& prev, double dt,
                       const MappingParams& params) {
    if (!(dt > 0.0)) throw InputError("smoothing step must be positive");
    if (cmd.gate != Gate::Normal) return {0.0, 0.0, cmd.gate};
    // v' = v + k * (v - v'_prev) / dt * dt
    return {(1.0 + params.k_v_d) * cmd.v - params.k_v_d * prev.v,
            (1.0 + params.k_w_d) * cmd.w - params.k_w_d * prev.w, Gate::Normal};
}

TickResult pipeline_tick(const SensorFrame& frame, const CalibrationProfile& profile,
                         const MappingParams& params, const VelocityCommand& prev, double dt) {
    TickResult out;
    out.lambda = effective_conductance(frame, profile);
    out.theta_b_deg = corrected_bend_deg(frame, profile);
    out.cop = compute_cop(out.lambda, profile.layout, params.contact_threshold);
    if (!out.cop) {
        out.raw = {0.0, 0.0, Gate::NoContact};
        // Safety still wins over a lost contact.
        if (out.theta_b_deg > params.theta_fst || out.theta_b_deg < params.theta_bst) {
            out.context = BendContext::Safety;
            out.raw.gate = Gate::SafetyStop;
        }
        out.command = smooth(out.raw, prev, dt, params);
        return out;
    }
    out.category = classify_posture(*out.cop, profile.beta);
    out.theta_fm_deg = forward_max_angle(*out.cop, profile, params);
    const auto mag = magnitude(out.theta_b_deg, out.theta_fm_deg, params);
    out.p = mag.p;
    out.context = mag.context;
    out.raw = command(mag, *out.cop, profile.beta, params);
    out.command = smooth(out.raw, prev, dt, params);
    return out;
}

PipelineSession::PipelineSession(CalibrationProfile profile, MappingParams params)
    : profile_(std::move(profile)), params_(params) {
    profile_.validate();
    params_.validate();
}

TickResult PipelineSession::tick(const SensorFrame& frame, double dt) {
    auto r = pipeline_tick(frame, profile_, params_, prev_, dt);
    prev_ = r.command;
    return r;
}

void PipelineSession::set_params(const MappingParams& params) {
    params.validate();
    params_ = params;
}

} // namespace torso
