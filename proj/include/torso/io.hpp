#pragma once

// File formats: JSON config/profile, JSON Lines streams and CSV reports.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "torso/coupling.hpp"
#include "torso/harness.hpp"
#include "torso/mapping.hpp"
#include "torso/sensing.hpp"
#include "torso/vehicle.hpp"

namespace torso::io {

using nlohmann::json;

json to_json(const CalibrationProfile& p);
CalibrationProfile profile_from_json(const json& j);

json to_json(const MappingParams& p);
// Applies the keys present in `j` on top of `base`.
MappingParams mapping_from_json(const json& j, MappingParams base = {});

json to_json(const coupling::Params& p);
coupling::Params coupling_from_json(const json& j, coupling::Params base = {});

json to_json(const vehicle::PathSpec& path);
vehicle::PathSpec path_from_json(const json& j);

// One config file carries the profile keys at top level plus optional
// "mapping", "coupling", "scenario" and "user" sections.
struct ConfigFile {
    std::optional<CalibrationProfile> profile;
    MappingParams mapping;
    coupling::Params coupling;
    json scenario = json::object();
    json user = json::object();
};

ConfigFile load_config(const std::filesystem::path& file);
ConfigFile config_from_json(const json& j);
json to_json(const ConfigFile& c);

// Scenario overrides on top of a base scenario ("course", "straight_len", "radius",
// "lookahead", "target_speed", "cruise_intensity", "recovery_radius", "dt",
// "duration_cap", "calibrate", "seed").
harness::ScenarioConfig scenario_from_json(const json& j, harness::ScenarioConfig base);
harness::SyntheticUser user_from_json(const json& j, harness::SyntheticUser base);

json to_json(const SensorFrame& f);
SensorFrame frame_from_json(const json& j);
std::vector<SensorFrame> read_frames(std::istream& in);
std::vector<SensorFrame> read_frames(const std::filesystem::path& file);
void write_frames(std::ostream& out, const std::vector<SensorFrame>& frames);

void write_trace(std::ostream& out, const vehicle::RunTrace& trace);
vehicle::RunTrace read_trace(std::istream& in);
vehicle::RunTrace read_trace(const std::filesystem::path& file);

void write_coupling(std::ostream& out, const std::vector<coupling::Sample>& samples);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& scenario, const vehicle::Metrics& m);

void write_stiffness(std::ostream& out, const std::vector<harness::StiffnessRow>& rows);
void write_velocity_space(std::ostream& out, const std::vector<harness::VelocityPoint>& points);

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

json read_json(const std::filesystem::path& file);

} // namespace torso::io
