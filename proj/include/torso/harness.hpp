#pragma once

// Closed-loop stand-in for a rider: a pure-pursuit intent generator, a
// posture-to-sensor model, the mapping pipeline and the kinematic base.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "torso/coupling.hpp"
#include "torso/mapping.hpp"
#include "torso/sensing.hpp"
#include "torso/vehicle.hpp"

namespace torso::harness {

struct Intent {
    PostureCategory category = PostureCategory::BendForward;
    double intensity = 0.0; // 0 = neutral, 1 = full bend budget
    double bias = 0.0;      // position inside the posture zone, -1 (low COP edge) .. +1
};

// Ground truth of a simulated rider and their sensor pad.
struct SyntheticUser {
    SensorLayout layout;
    AdcCircuit circuit;
    std::vector<double> alpha{1.0, 1.0, 1.0, 1.0, 1.0}; // reading = pressure / alpha
    std::vector<double> baseline{0.05, 0.05, 0.05, 0.05, 0.05}; // rest conductance
    double theta_rest_deg = 0.0;
    PostureValues delta_ref{-0.8, -0.4, 0.0, 0.4, 0.8};
    PostureValues theta_fm_deg{20.0, 22.5, 25.0, 22.5, 20.0};
    double press = 1.0;            // peak effective pressure while leaning on the pad
    double zone_margin = 0.02;     // keeps placed COPs strictly inside a zone
    double noise_lambda_rel = 0.0; // relative Gaussian noise on conductance
    double noise_theta_deg = 0.0;  // Gaussian noise on the bending angle

    Boundaries beta() const;
    void validate() const;

    // Effective (alpha-scaled) pressure that puts the COP exactly at `cop`:
    // full press on the nearest sensor, partial press on the neighbour toward `cop`.
    std::vector<double> pressure_pattern(double cop) const;

    SensorFrame frame(double t, std::span<const double> pressure, double theta_b_deg,
                      std::mt19937_64* rng) const;

    // Profile an ideal calibration would produce for this user.
    CalibrationProfile ideal_profile(double theta_fm_default_deg = 25.0) const;
};

double cop_for_intent(const Intent& intent, const SyntheticUser& user);
Intent intent_for_cop(double cop, double intensity, const SyntheticUser& user);

SensorFrame synthesize_frame(const Intent& intent, const SyntheticUser& user, double theta_fm_budget_deg,
                             const MappingParams& params, double t = 0.0, std::mt19937_64* rng = nullptr);

// Scripted calibration session: neutral rest followed by the protocol's dwells.
std::vector<SensorFrame> record_calibration(const SyntheticUser& user, const CalibrationProtocol& protocol,
                                            std::mt19937_64* rng = nullptr);

PostureCalibrationResult calibrate_user(const SyntheticUser& user, const CalibrationProtocol& protocol,
                                        double theta_fm_default_deg, std::mt19937_64* rng = nullptr);

struct DriverParams {
    double lookahead = 1.0;        // m
    double cruise_intensity = 0.6;
    double recovery_radius = 1.5;  // m
    std::optional<double> target_speed; // m/s; overrides cruise_intensity
};

struct DriverOutput {
    Intent intent;
    bool abort = false;
    double heading_error = 0.0; // rad, + when the lookahead point is to the left
    double target_cop = 0.0;
    vehicle::Point lookahead_point;
};

// Bend intensity that gives `speed` on the forward plateau.
double intensity_for_speed(double speed, const MappingParams& params);

// COP whose weights turn the device along `curvature` (1/m, + = left).
double cop_for_curvature(double curvature, const Boundaries& beta, const MappingParams& params);

DriverOutput virtual_driver(const vehicle::Pose& pose, const vehicle::PathSpec& path,
                            vehicle::ProgressTracker& tracker, const DriverParams& driver,
                            const CalibrationProfile& profile, const MappingParams& params,
                            const SyntheticUser& user);

struct ScenarioConfig {
    std::string name = "figure8";
    double straight_len = 4.0;
    double radius = 1.0;
    MappingParams mapping;
    SyntheticUser user;
    bool calibrate = true; // run the calibration protocol on the synthetic user first
    std::optional<CalibrationProfile> profile; // used when calibrate is false
    CalibrationProtocol protocol;
    DriverParams driver;
    double dt = 0.02;
    double duration_cap = 300.0;
    std::uint64_t seed = 1;

    void validate() const;
};

// Default scenario: mild sensor noise, uneven sensor sensitivities.
ScenarioConfig default_scenario();

enum class RunStatus { Completed, Aborted, Timeout };
std::string_view to_string(RunStatus s);

struct RunResult {
    vehicle::RunTrace trace;
    vehicle::Metrics metrics;
    RunStatus status = RunStatus::Timeout;
    std::size_t safety_stops = 0;
    std::size_t no_contact_ticks = 0;
    CalibrationProfile profile;
    std::uint64_t params_hash = 0;
};

RunResult run_closed_loop(const ScenarioConfig& config);

struct VelocityPoint {
    double v = 0.0; // normalized by v_max
    double w = 0.0; // normalized by w_max
    BendContext context = BendContext::Dead;
};

// Attainable normalized (v, w) over a COP x bending-angle grid.
std::vector<VelocityPoint> velocity_space_sweep(const CalibrationProfile& profile, const MappingParams& params,
                                                int cop_steps = 101, int bend_steps = 101);

struct StiffnessRow {
    double kappa = 0.0;
    double a_aa = 0.0;
    double rise_time = 0.0;
    double overshoot = 0.0;
    bool fell = false;
    double fell_at = 0.0;
};

struct StiffnessStudyConfig {
    coupling::Params params;
    coupling::ForceProfile profile = coupling::ForceProfile::staircase(33.65);
    coupling::SimulationOptions sim;
};

StiffnessRow stiffness_run(double kappa, const StiffnessStudyConfig& config);
std::vector<StiffnessRow> stiffness_study(const std::vector<double>& kappas, const StiffnessStudyConfig& config);

} // namespace torso::harness
