#pragma once

// Pointer space (P, COP) -> robot motion space (v, w).
//
// Sign convention for w: positive w yaws the device clockwise (to the right).
// Low COP values (SpinCCW / TurnLeft postures) therefore produce w < 0 and a
// left turn. See vehicle.hpp for the matching kinematics.

#include <optional>
#include <string_view>

#include "torso/sensing.hpp"

namespace torso {

struct MappingParams {
    // Bending thresholds, degrees.
    double theta_ft = 3.0;
    double theta_fm_default = 25.0;
    double theta_fst = 40.0;
    double theta_bt = -3.0;
    double theta_bm = -15.0;
    double theta_bst = -25.0;
    double rho = 0.75;        // share of the parabola half-branch used by the magnitude curve
    double w_v_back = -0.8;   // linear weight while reversing
    double v_max = 1.0;       // m/s
    double w_max = 1.0;       // rad/s
    double k_v_d = -0.9;
    double k_w_d = -0.9;
    double contact_threshold = kDefaultContactThreshold;
    bool literal_eq12 = false; // right-turn angular weight as printed (discontinuous)

    void validate() const;
};

enum class BendContext { Dead, Forward, Backward, Safety };
enum class Gate { Normal, SafetyStop, NoContact };

std::string_view to_string(BendContext c);
std::string_view to_string(Gate g);
Gate gate_from_string(std::string_view name);

struct Magnitude {
    double p = 0.0;
    BendContext context = BendContext::Dead;
};

struct Weights {
    double w_v = 0.0;
    double w_w = 0.0;
};

struct VelocityCommand {
    double v = 0.0;
    double w = 0.0;
    Gate gate = Gate::Normal;

    bool operator==(const VelocityCommand&) const = default;
};

// Bending angle -> speed magnitude P in [0, 1]. theta_fm is the posture-dependent
// forward maximum; it must lie in (theta_ft, theta_fst].
Magnitude magnitude(double theta_b_deg, double theta_fm_deg, const MappingParams& params);

double forward_max_angle(double cop, const CalibrationProfile& profile, const MappingParams& params);

Weights weights(double cop, const Boundaries& beta, bool literal_eq12 = false);

VelocityCommand command(const Magnitude& mag, double cop, const Boundaries& beta,
                        const MappingParams& params);

// First-order low-pass with pole -k_d. Any non-Normal gate passes through as an exact stop.
VelocityCommand smooth(const VelocityCommand& cmd, const VelocityCommand& prev, double dt,
                       const MappingParams& params);

struct TickResult {
    VelocityCommand raw;      // before smoothing
    VelocityCommand command;  // after smoothing
    std::optional<double> cop;
    double p = 0.0;
    double theta_b_deg = 0.0; // offset-corrected
    double theta_fm_deg = 0.0;
    BendContext context = BendContext::Dead;
    std::optional<PostureCategory> category;
    std::vector<double> lambda; // effective conductances
};

TickResult pipeline_tick(const SensorFrame& frame, const CalibrationProfile& profile,
                         const MappingParams& params, const VelocityCommand& prev, double dt);

// Holds the smoothing state between ticks. Not safe to tick from several threads.
class PipelineSession {
public:
    PipelineSession(CalibrationProfile profile, MappingParams params);

    TickResult tick(const SensorFrame& frame, double dt);
    void reset() { prev_ = {}; }

    const CalibrationProfile& profile() const { return profile_; }
    const MappingParams& params() const { return params_; }
    void set_params(const MappingParams& params);
    const VelocityCommand& last_command() const { return prev_; }

private:
    CalibrationProfile profile_;
    MappingParams params_;
    VelocityCommand prev_;
};

} // namespace torso
