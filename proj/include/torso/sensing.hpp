#pragma once

// Sensor side of the torso interface: FSR conductance, center of pressure,
// posture classification and per-user calibration.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace torso {

inline constexpr int kPostureCount = 5;

struct SensorLayout {
    std::vector<double> s{-1.0, -0.5, 0.0, 0.5, 1.0}; // normalized locations, strictly increasing
    double sensor_pitch = 0.044;                       // m, informational

    std::size_t n() const { return s.size(); }
    void validate() const;
};

// Linear FSR divider model: conductance proportional to ADC counts.
struct AdcCircuit {
    double full_scale = 4095.0;     // ADC counts at the top of the range
    double conductance_full = 4.0;  // normalized conductance at full scale

    void validate() const;
};

struct SensorFrame {
    double t = 0.0;
    std::vector<double> raw;  // ADC counts, one per sensor
    double theta_b_deg = 0.0; // + forward
};

// Ordered by increasing COP: low delta is the counter-clockwise spin posture.
enum class PostureCategory { SpinCCW = 0, TurnLeft, BendForward, TurnRight, SpinCW };

std::string_view to_string(PostureCategory c);
PostureCategory posture_from_string(std::string_view name);

using Boundaries = std::array<double, 4>;              // beta_1..beta_4
using PostureValues = std::array<double, kPostureCount>; // one value per posture, COP order

struct CalibrationProfile {
    SensorLayout layout;
    AdcCircuit circuit;
    std::vector<double> zero_offsets; // conductance at rest, per sensor
    double theta_offset_deg = 0.0;    // IMU angle at rest
    std::vector<double> alpha;        // per-sensor weights
    double p_max = 1.0;
    Boundaries beta{-0.6, -0.2, 0.2, 0.6};
    PostureValues delta_ref{-0.8, -0.4, 0.0, 0.4, 0.8};
    std::array<double, 3> f1_coeffs{0.0, 0.0, 1.0}; // c2, c1, c0
    PostureValues theta_fm_per_posture{25.0, 25.0, 25.0, 25.0, 25.0};

    // Uncalibrated profile: zero offsets, unit weights, default boundaries.
    static CalibrationProfile identity(const SensorLayout& layout = {});
    void validate() const;
};

inline constexpr double kDefaultContactThreshold = 0.02;

// Raw ADC counts -> normalized conductance. Throws InputError outside [0, full_scale].
double to_conductance(double raw, const AdcCircuit& circuit);

// Unweighted center of pressure (weights are folded into lambda beforehand).
// Returns nullopt when no sensor exceeds the contact threshold.
std::optional<double> compute_cop(std::span<const double> lambda, const SensorLayout& layout,
                                  double contact_threshold = kDefaultContactThreshold);

void validate_boundaries(const Boundaries& beta);
PostureCategory classify_posture(double cop, const Boundaries& beta);

// Offset-subtracted, clamped, alpha-weighted conductances for one frame.
std::vector<double> effective_conductance(const SensorFrame& frame, const CalibrationProfile& profile);
double corrected_bend_deg(const SensorFrame& frame, const CalibrationProfile& profile);

struct NeutralCalibration {
    std::vector<double> zero_offsets;
    double theta_offset_deg = 0.0;
};

NeutralCalibration calibrate_neutral(std::span<const SensorFrame> frames, const AdcCircuit& circuit,
                                     double sample_rate_hz = 50.0, double min_duration_s = 2.0);

struct PostureDwell {
    PostureCategory category;
    std::vector<SensorFrame> frames;
};

struct PostureCalibrationOptions {
    double theta_fm_default_deg = 25.0;
    double p_max = 1.0;
    double sample_rate_hz = 50.0;
    double min_dwell_s = 3.0;
    double top_fraction = 0.1;
    double activation_threshold = kDefaultContactThreshold;
    double contact_threshold = kDefaultContactThreshold;
    // Use theta_FM^d / theta_FM^i as printed instead of theta_FM^i / theta_FM^d.
    bool literal_kfm = false;
};

struct PostureCalibrationResult {
    CalibrationProfile profile;
    std::vector<bool> sensor_ok;     // false where the sensor never activated (alpha fell back to 1)
    PostureValues k_fm{};            // per-posture gain samples used for the fit
    double fit_residual_rms = 0.0;
};

PostureCalibrationResult calibrate_postures(std::span<const PostureDwell> dwells,
                                            const NeutralCalibration& neutral,
                                            const SensorLayout& layout, const AdcCircuit& circuit,
                                            const PostureCalibrationOptions& options = {});

// Least-squares quadratic through (x_i, y_i); coefficients c2, c1, c0.
std::array<double, 3> fit_quadratic(std::span<const double> x, std::span<const double> y);

inline constexpr double kMinPostureGain = 0.3;
inline constexpr double kMaxPostureGain = 1.5;

double eval_f1(double cop, const std::array<double, 3>& coeffs, double k_min = kMinPostureGain,
               double k_max = kMaxPostureGain);

// Time-scripted calibration recording: neutral rest, then dwells in a fixed order.
struct CalibrationProtocol {
    double neutral_s = 2.0;
    double dwell_s = 3.0;
    double settle_margin_s = 0.5; // trimmed from both ends of every dwell
    int passes = 2;               // alternating sweeps SpinCW -> SpinCCW -> SpinCW ...
    double sample_rate_hz = 50.0;

    std::vector<PostureCategory> sequence() const;
};

struct SegmentedRecording {
    std::vector<SensorFrame> neutral;
    std::vector<PostureDwell> dwells;
};

SegmentedRecording segment_recording(std::span<const SensorFrame> frames,
                                     const CalibrationProtocol& protocol);

} // namespace torso
