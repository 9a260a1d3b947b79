#include "torso/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "torso/error.hpp"

namespace torso {

namespace {

constexpr std::array<std::string_view, kPostureCount> kPostureNames{
    "SpinCCW", "TurnLeft", "BendForward", "TurnRight", "SpinCW"};

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

} // namespace

std::string_view to_string(PostureCategory c) { return kPostureNames[static_cast<int>(c)]; }

PostureCategory posture_from_string(std::string_view name) {
    for (int i = 0; i < kPostureCount; ++i)
        if (kPostureNames[i] == name) return static_cast<PostureCategory>(i);
    throw InputError("unknown posture category: " + std::string(name));
}

void SensorLayout::validate() const {
    if (s.size() < 2) throw ConfigError("sensor layout needs at least 2 sensors");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!(s[i] > s[i - 1])) throw ConfigError("sensor locations must be strictly increasing");
}

void AdcCircuit::validate() const {
    if (!(full_scale > 0.0) || !(conductance_full > 0.0))
        throw ConfigError("ADC full scale and conductance must be positive");
}

CalibrationProfile CalibrationProfile::identity(const SensorLayout& layout) {
    CalibrationProfile p;
    p.layout = layout;
    p.zero_offsets.assign(layout.n(), 0.0);
    p.alpha.assign(layout.n(), 1.0);
    return p;
}

void CalibrationProfile::validate() const {
    layout.validate();
    circuit.validate();
    if (zero_offsets.size() != layout.n() || alpha.size() != layout.n())
        throw ConfigError("calibration vectors do not match sensor count");
    for (double a : alpha)
        if (!(a > 0.0)) throw ConfigError("sensor weights must be positive");
    validate_boundaries(beta);
    for (int i = 1; i < kPostureCount; ++i)
        if (!(delta_ref[i] > delta_ref[i - 1]))
            throw ConfigError("reference COPs must be strictly increasing");
    for (double d : delta_ref)
        if (!(eval_f1(d, f1_coeffs, -1e300, 1e300) > 0.0))
            throw ConfigError("posture gain polynomial must be positive at the reference COPs");
}

double to_conductance(double raw, const AdcCircuit& circuit) {
    if (!(raw >= 0.0) || raw > circuit.full_scale)
        throw InputError("ADC reading " + std::to_string(raw) + " outside [0, " +
                         std::to_string(circuit.full_scale) + "]");
    return raw / circuit.full_scale * circuit.conductance_full;
}

std::optional<double> compute_cop(std::span<const double> lambda, const SensorLayout& layout,
                                  double contact_threshold) {
    if (lambda.size() != layout.n()) throw InputError("conductance count does not match layout");
    double num = 0.0;
    double den = 0.0;
    bool contact = false;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < 0.0) throw InputError("negative conductance");
        contact = contact || lambda[i] > contact_threshold;
        num += lambda[i] * layout.s[i];
        den += lambda[i];
    }
    if (!contact) return std::nullopt;
    // Rounding can push the weighted mean a hair outside the sensor span.
    return std::clamp(num / den, layout.s.front(), layout.s.back());
}

void validate_boundaries(const Boundaries& beta) {
    for (int i = 1; i < 4; ++i)
        if (!(beta[i] > beta[i - 1])) throw ConfigError("posture boundaries must be strictly increasing");
}

PostureCategory classify_posture(double cop, const Boundaries& beta) {
    validate_boundaries(beta);
    if (cop < beta[0]) return PostureCategory::SpinCCW;
    if (cop < beta[1]) return PostureCategory::TurnLeft;
    if (cop < beta[2]) return PostureCategory::BendForward;
    if (cop < beta[3]) return PostureCategory::TurnRight;
    return PostureCategory::SpinCW;
}

std::vector<double> effective_conductance(const SensorFrame& frame, const CalibrationProfile& profile) {
    const std::size_t n = profile.layout.n();
    if (frame.raw.size() != n) throw InputError("frame sensor count does not match layout");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lambda = to_conductance(frame.raw[i], profile.circuit) - profile.zero_offsets[i];
        out[i] = std::max(lambda, 0.0) * profile.alpha[i];
    }
    return out;
}

double corrected_bend_deg(const SensorFrame& frame, const CalibrationProfile& profile) {
    if (!std::isfinite(frame.theta_b_deg)) throw InputError("non-finite bending angle");
    return frame.theta_b_deg - profile.theta_offset_deg;
}

NeutralCalibration calibrate_neutral(std::span<const SensorFrame> frames, const AdcCircuit& circuit,
                                     double sample_rate_hz, double min_duration_s) {
    const auto needed = static_cast<std::size_t>(std::ceil(sample_rate_hz * min_duration_s - 1e-9));
    if (frames.empty() || frames.size() < needed)
        throw CalibrationError("neutral calibration needs " + std::to_string(needed) +
                               " samples, got " + std::to_string(frames.size()));
    const std::size_t n = frames.front().raw.size();
    NeutralCalibration out;
    out.zero_offsets.assign(n, 0.0);
    for (const auto& f : frames) {
        if (f.raw.size() != n) throw InputError("inconsistent sensor count in neutral recording");
        for (std::size_t i = 0; i < n; ++i) out.zero_offsets[i] += to_conductance(f.raw[i], circuit);
        out.theta_offset_deg += f.theta_b_deg;
    }
    const auto count = static_cast<double>(frames.size());
    for (double& o : out.zero_offsets) o /= count;
    out.theta_offset_deg /= count;
    return out;
}

std::array<double, 3> fit_quadratic(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw InputError("quadratic fit needs >= 3 points");
    Eigen::MatrixXd a(x.size(), 3);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        a(i, 0) = x[i] * x[i];
        a(i, 1) = x[i];
        a(i, 2) = 1.0;
        b(i) = y[i];
    }
    Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    return {c(0), c(1), c(2)};
}

double eval_f1(double cop, const std::array<double, 3>& coeffs, double k_min, double k_max) {
    const double k = (coeffs[0] * cop + coeffs[1]) * cop + coeffs[2];
    return std::clamp(k, k_min, k_max);
}

PostureCalibrationResult calibrate_postures(std::span<const PostureDwell> dwells,
                                            const NeutralCalibration& neutral,
                                            const SensorLayout& layout, const AdcCircuit& circuit,
                                            const PostureCalibrationOptions& options) {
    layout.validate();
    const std::size_t n = layout.n();
    if (neutral.zero_offsets.size() != n) throw CalibrationError("neutral offsets do not match layout");

    // Dwell time is totalled per posture, so trimmed repeats of one posture add up.
    std::array<std::size_t, kPostureCount> samples{};
    for (const auto& d : dwells) samples[static_cast<int>(d.category)] += d.frames.size();
    const auto min_samples =
        static_cast<std::size_t>(std::ceil(options.sample_rate_hz * options.min_dwell_s - 1e-9));
    for (int i = 0; i < kPostureCount; ++i) {
        const std::string name(to_string(static_cast<PostureCategory>(i)));
        if (samples[i] == 0) throw CalibrationError("recording is missing posture " + name);
        if (samples[i] < min_samples)
            throw CalibrationError("posture " + name + " held for less than " +
                                   std::to_string(options.min_dwell_s) + " s");
    }

    CalibrationProfile profile;
    profile.layout = layout;
    profile.circuit = circuit;
    profile.zero_offsets = neutral.zero_offsets;
    profile.theta_offset_deg = neutral.theta_offset_deg;
    profile.p_max = options.p_max;
    profile.alpha.assign(n, 1.0);

    // Offset-subtracted conductances per sensor across every dwell sample.
    std::vector<std::vector<double>> per_sensor(n);
    for (const auto& d : dwells)
        for (const auto& f : d.frames) {
            if (f.raw.size() != n) throw InputError("inconsistent sensor count in posture recording");
            for (std::size_t i = 0; i < n; ++i)
                per_sensor[i].push_back(
                    std::max(to_conductance(f.raw[i], circuit) - neutral.zero_offsets[i], 0.0));
        }

    PostureCalibrationResult result;
    result.sensor_ok.assign(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = per_sensor[i];
        const auto top = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(options.top_fraction * static_cast<double>(v.size()))));
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(top - 1), v.end(),
                         std::greater<>());
        const double top_mean = mean(std::span<const double>(v.data(), top));
        if (top_mean < options.activation_threshold) {
            result.sensor_ok[i] = false;
            profile.alpha[i] = 1.0;
        } else {
            profile.alpha[i] = options.p_max / top_mean;
        }
    }

    // Per-posture mean COP and mean bending angle over all dwells of that posture.
    std::array<double, kPostureCount> cop_sum{};
    std::array<double, kPostureCount> theta_sum{};
    std::array<std::size_t, kPostureCount> cop_count{};
    std::array<std::size_t, kPostureCount> theta_count{};
    for (const auto& d : dwells) {
        const int k = static_cast<int>(d.category);
        for (const auto& f : d.frames) {
            auto lambda = effective_conductance(f, profile);
            if (auto cop = compute_cop(lambda, layout, options.contact_threshold)) {
                cop_sum[k] += *cop;
                ++cop_count[k];
            }
            theta_sum[k] += corrected_bend_deg(f, profile);
            ++theta_count[k];
        }
    }
    for (int k = 0; k < kPostureCount; ++k) {
        if (cop_count[k] == 0)
            throw CalibrationError("no sensor contact during posture " +
                                   std::string(to_string(static_cast<PostureCategory>(k))));
        profile.delta_ref[k] = cop_sum[k] / static_cast<double>(cop_count[k]);
        profile.theta_fm_per_posture[k] = theta_sum[k] / static_cast<double>(theta_count[k]);
    }
    for (int k = 1; k < kPostureCount; ++k)
        if (!(profile.delta_ref[k] > profile.delta_ref[k - 1]))
            throw CalibrationError("posture COPs are not ordered SpinCCW < ... < SpinCW");
    for (int k = 0; k < 4; ++k) profile.beta[k] = 0.5 * (profile.delta_ref[k] + profile.delta_ref[k + 1]);

    for (int k = 0; k < kPostureCount; ++k) {
        const double theta_i = profile.theta_fm_per_posture[k];
        if (!(theta_i > 0.0)) throw CalibrationError("non-positive maximum bending angle in calibration");
        result.k_fm[k] = options.literal_kfm ? options.theta_fm_default_deg / theta_i
                                             : theta_i / options.theta_fm_default_deg;
    }
    profile.f1_coeffs = fit_quadratic(profile.delta_ref, result.k_fm);

    double sq = 0.0;
    for (int k = 0; k < kPostureCount; ++k) {
        const double r = eval_f1(profile.delta_ref[k], profile.f1_coeffs, -1e300, 1e300) - result.k_fm[k];
        sq += r * r;
    }
    result.fit_residual_rms = std::sqrt(sq / kPostureCount);
    profile.validate();
    result.profile = std::move(profile);
    return result;
}

std::vector<PostureCategory> CalibrationProtocol::sequence() const {
    static constexpr std::array<PostureCategory, kPostureCount> sweep{
        PostureCategory::SpinCW, PostureCategory::TurnRight, PostureCategory::BendForward,
        PostureCategory::TurnLeft, PostureCategory::SpinCCW};
    std::vector<PostureCategory> out;
    for (int p = 0; p < passes; ++p) {
        if (p % 2 == 0)
            out.insert(out.end(), sweep.begin(), sweep.end());
        else
            out.insert(out.end(), sweep.rbegin(), sweep.rend());
    }
    return out;
}

SegmentedRecording segment_recording(std::span<const SensorFrame> frames,
                                     const CalibrationProtocol& protocol) {
    if (frames.empty()) throw CalibrationError("empty calibration recording");
    const double t0 = frames.front().t;
    const auto seq = protocol.sequence();
    SegmentedRecording out;
    out.dwells.reserve(seq.size());
    for (auto c : seq) out.dwells.push_back({c, {}});
    const double end = protocol.neutral_s + protocol.dwell_s * static_cast<double>(seq.size());
    // Half a sample of slack keeps boundary samples from flipping on rounding.
    const double eps = 0.5 / protocol.sample_rate_hz;
    for (const auto& f : frames) {
        const double t = f.t - t0;
        if (t < protocol.neutral_s - eps) {
            out.neutral.push_back(f);
            continue;
        }
        if (t >= end - eps) break;
        const double local = t - protocol.neutral_s;
        auto k = static_cast<std::size_t>(std::floor((local + eps) / protocol.dwell_s));
        k = std::min(k, seq.size() - 1);
        const double in_dwell = local - static_cast<double>(k) * protocol.dwell_s;
        if (in_dwell + eps < protocol.settle_margin_s ||
            in_dwell + eps > protocol.dwell_s - protocol.settle_margin_s)
            continue;
        out.dwells[k].frames.push_back(f);
    }
    return out;
}

} // namespace torso
