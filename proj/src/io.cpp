#include "torso/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "torso/error.hpp"

namespace torso::io {

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <class T>
T need(const json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json point(const vehicle::Point& p) { return json::array({p.x, p.y}); }

vehicle::Point point_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw InputError("point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <class F>
void for_each_line(std::istream& in, F&& f) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw InputError("line " + std::to_string(n) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(n) + ": " + e.what());
        }
    }
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    return in;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

json to_json(const CalibrationProfile& p) {
    return {{"zero_offsets", p.zero_offsets},
            {"alpha", p.alpha},
            {"p_max", p.p_max},
            {"beta", p.beta},
            {"delta_ref", p.delta_ref},
            {"f1_coeffs", p.f1_coeffs},
            {"theta_fm_per_posture", p.theta_fm_per_posture},
            {"layout", p.layout.s},
            {"theta_offset", p.theta_offset_deg},
            {"circuit", {{"full_scale", p.circuit.full_scale}, {"conductance_full", p.circuit.conductance_full}}}};
}

CalibrationProfile profile_from_json(const json& j) {
    CalibrationProfile p;
    p.layout.s = need<std::vector<double>>(j, "layout");
    p.zero_offsets = need<std::vector<double>>(j, "zero_offsets");
    p.alpha = need<std::vector<double>>(j, "alpha");
    p.p_max = need<double>(j, "p_max");
    p.beta = need<Boundaries>(j, "beta");
    p.delta_ref = need<PostureValues>(j, "delta_ref");
    p.f1_coeffs = need<std::array<double, 3>>(j, "f1_coeffs");
    p.theta_fm_per_posture = need<PostureValues>(j, "theta_fm_per_posture");
    take(j, "theta_offset", p.theta_offset_deg);
    if (j.contains("circuit")) {
        take(j["circuit"], "full_scale", p.circuit.full_scale);
        take(j["circuit"], "conductance_full", p.circuit.conductance_full);
    }
    p.validate();
    return p;
}

json to_json(const MappingParams& p) {
    return {{"theta_ft", p.theta_ft},   {"theta_fm_default", p.theta_fm_default},
            {"theta_fst", p.theta_fst}, {"theta_bt", p.theta_bt},
            {"theta_bm", p.theta_bm},   {"theta_bst", p.theta_bst},
            {"rho", p.rho},             {"w_v_back", p.w_v_back},
            {"v_max", p.v_max},         {"w_max", p.w_max},
            {"k_v_d", p.k_v_d},         {"k_w_d", p.k_w_d},
            {"contact_threshold", p.contact_threshold}, {"literal_eq12", p.literal_eq12}};
}

MappingParams mapping_from_json(const json& j, MappingParams p) {
    if (!j.is_object()) throw ConfigError("mapping section must be an object");
    static const char* known[] = {"theta_ft", "theta_fm_default", "theta_fst", "theta_bt", "theta_bm",
                                  "theta_bst", "rho", "w_v_back", "v_max", "w_max", "k_v_d", "k_w_d",
                                  "contact_threshold", "literal_eq12"};
    for (const auto& [key, _] : j.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError("unknown mapping parameter '" + key + "'");
    take(j, "theta_ft", p.theta_ft);
    take(j, "theta_fm_default", p.theta_fm_default);
    take(j, "theta_fst", p.theta_fst);
    take(j, "theta_bt", p.theta_bt);
    take(j, "theta_bm", p.theta_bm);
    take(j, "theta_bst", p.theta_bst);
    take(j, "rho", p.rho);
    take(j, "w_v_back", p.w_v_back);
    take(j, "v_max", p.v_max);
    take(j, "w_max", p.w_max);
    take(j, "k_v_d", p.k_v_d);
    take(j, "k_w_d", p.k_w_d);
    take(j, "contact_threshold", p.contact_threshold);
    take(j, "literal_eq12", p.literal_eq12);
    p.validate();
    return p;
}

json to_json(const coupling::Params& p) {
    return {{"m", p.m},     {"M", p.M},     {"l", p.l},     {"g", p.g},     {"h_max", p.h_max},
            {"kappa", p.kappa}, {"k_c", p.k_c}, {"k_d", p.k_d}, {"k_2", p.k_2}, {"k_3", p.k_3}};
}

coupling::Params coupling_from_json(const json& j, coupling::Params p) {
    take(j, "m", p.m);
    take(j, "M", p.M);
    take(j, "l", p.l);
    take(j, "g", p.g);
    take(j, "h_max", p.h_max);
    take(j, "kappa", p.kappa);
    take(j, "k_c", p.k_c);
    take(j, "k_d", p.k_d);
    take(j, "k_2", p.k_2);
    take(j, "k_3", p.k_3);
    p.validate();
    return p;
}

json to_json(const vehicle::PathSpec& path) {
    json segs = json::array();
    for (const auto& seg : path.segments) {
        if (const auto* s = std::get_if<vehicle::Straight>(&seg))
            segs.push_back({{"type", "straight"}, {"start", point(s->start)}, {"heading", s->heading},
                            {"length", s->length}});
        else {
            const auto& a = std::get<vehicle::Arc>(seg);
            segs.push_back({{"type", "arc"}, {"center", point(a.center)}, {"radius", a.radius},
                            {"start_angle", a.start_angle}, {"sweep", a.sweep}});
        }
    }
    json wps = json::array();
    for (const auto& p : path.waypoints) wps.push_back(point(p));
    return {{"segments", segs}, {"waypoints", wps}, {"length", path.length()}};
}

vehicle::PathSpec path_from_json(const json& j) {
    vehicle::PathSpec path;
    for (const auto& w : need<json>(j, "waypoints")) path.waypoints.push_back(point_from(w));
    if (path.waypoints.size() < 2) throw InputError("path needs at least 2 waypoints");
    if (j.contains("segments"))
        for (const auto& s : j["segments"]) {
            const auto type = need<std::string>(s, "type");
            if (type == "straight")
                path.segments.push_back(vehicle::Straight{point_from(need<json>(s, "start")),
                                                          need<double>(s, "heading"), need<double>(s, "length")});
            else if (type == "arc")
                path.segments.push_back(vehicle::Arc{point_from(need<json>(s, "center")), need<double>(s, "radius"),
                                                     need<double>(s, "start_angle"), need<double>(s, "sweep")});
            else
                throw InputError("unknown segment type '" + type + "'");
        }
    if (!path.segments.empty()) {
        // Arc lengths come from the exact segment geometry, not the chords.
        auto sampled = vehicle::sample_path(path.segments);
        if (sampled.waypoints.size() != path.waypoints.size())
            throw InputError("path waypoints do not match its segments");
        path.arc_length = std::move(sampled.arc_length);
        return path;
    }
    path.arc_length.push_back(0.0);
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const auto& a = path.waypoints[i - 1];
        const auto& b = path.waypoints[i];
        path.arc_length.push_back(path.arc_length.back() + std::hypot(b.x - a.x, b.y - a.y));
    }
    return path;
}

ConfigFile config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ConfigFile c;
    if (j.contains("zero_offsets")) {
        try {
            c.profile = profile_from_json(j);
        } catch (const InputError& e) {
            throw ConfigError(std::string("calibration profile: ") + e.what());
        }
    }
    if (j.contains("mapping")) c.mapping = mapping_from_json(j["mapping"]);
    if (j.contains("coupling")) c.coupling = coupling_from_json(j["coupling"]);
    if (j.contains("scenario")) c.scenario = j["scenario"];
    if (j.contains("user")) c.user = j["user"];
    return c;
}

ConfigFile load_config(const std::filesystem::path& file) { return config_from_json(read_json(file)); }

json to_json(const ConfigFile& c) {
    json j = c.profile ? to_json(*c.profile) : json::object();
    j["mapping"] = to_json(c.mapping);
    j["coupling"] = to_json(c.coupling);
    if (!c.scenario.empty()) j["scenario"] = c.scenario;
    if (!c.user.empty()) j["user"] = c.user;
    return j;
}

harness::ScenarioConfig scenario_from_json(const json& j, harness::ScenarioConfig c) {
    if (!j.is_object()) throw ConfigError("scenario section must be an object");
    take(j, "course", c.name);
    take(j, "straight_len", c.straight_len);
    take(j, "radius", c.radius);
    take(j, "lookahead", c.driver.lookahead);
    take(j, "cruise_intensity", c.driver.cruise_intensity);
    take(j, "recovery_radius", c.driver.recovery_radius);
    if (j.contains("target_speed") && !j["target_speed"].is_null()) {
        double v = 0.0;
        take(j, "target_speed", v);
        c.driver.target_speed = v;
    }
    take(j, "dt", c.dt);
    take(j, "duration_cap", c.duration_cap);
    take(j, "calibrate", c.calibrate);
    take(j, "seed", c.seed);
    return c;
}

harness::SyntheticUser user_from_json(const json& j, harness::SyntheticUser u) {
    if (!j.is_object()) throw ConfigError("user section must be an object");
    take(j, "alpha", u.alpha);
    take(j, "baseline", u.baseline);
    take(j, "theta_rest_deg", u.theta_rest_deg);
    take(j, "delta_ref", u.delta_ref);
    take(j, "theta_fm_deg", u.theta_fm_deg);
    take(j, "press", u.press);
    take(j, "noise_lambda_rel", u.noise_lambda_rel);
    take(j, "noise_theta_deg", u.noise_theta_deg);
    u.validate();
    return u;
}

json to_json(const SensorFrame& f) { return {{"t", f.t}, {"raw", f.raw}, {"theta_b_deg", f.theta_b_deg}}; }

SensorFrame frame_from_json(const json& j) {
    SensorFrame f;
    f.t = need<double>(j, "t");
    f.raw = need<std::vector<double>>(j, "raw");
    f.theta_b_deg = need<double>(j, "theta_b_deg");
    return f;
}

std::vector<SensorFrame> read_frames(std::istream& in) {
    std::vector<SensorFrame> out;
    for_each_line(in, [&](const json& j) { out.push_back(frame_from_json(j)); });
    return out;
}

std::vector<SensorFrame> read_frames(const std::filesystem::path& file) {
    auto in = open_in(file);
    return read_frames(in);
}

void write_frames(std::ostream& out, const std::vector<SensorFrame>& frames) {
    for (const auto& f : frames) out << to_json(f).dump() << '\n';
}

void write_trace(std::ostream& out, const vehicle::RunTrace& trace) {
    for (const auto& s : trace.samples)
        out << json{{"t", s.t}, {"x", s.pose.x}, {"y", s.pose.y}, {"heading", s.pose.heading}, {"v", s.v}, {"w", s.w}}
                   .dump()
            << '\n';
}

vehicle::RunTrace read_trace(std::istream& in) {
    vehicle::RunTrace trace;
    for_each_line(in, [&](const json& j) {
        trace.samples.push_back({need<double>(j, "t"),
                                 {need<double>(j, "x"), need<double>(j, "y"), need<double>(j, "heading")},
                                 need<double>(j, "v"),
                                 need<double>(j, "w")});
    });
    return trace;
}

vehicle::RunTrace read_trace(const std::filesystem::path& file) {
    auto in = open_in(file);
    return read_trace(in);
}

void write_coupling(std::ostream& out, const std::vector<coupling::Sample>& samples) {
    for (const auto& s : samples)
        out << json{{"t", s.t},         {"x", s.state.x}, {"x_dot", s.state.x_dot}, {"theta", s.state.theta},
                    {"theta_dot", s.state.theta_dot}, {"F_c", s.contact}, {"v_ref", s.v_ref}, {"u", s.u},
                    {"h", s.h}}
                   .dump()
            << '\n';
}

void write_metrics_header(std::ostream& out) { out << "scenario,CT,A_a,A_e\n"; }

void write_metrics_row(std::ostream& out, const std::string& scenario, const vehicle::Metrics& m) {
    out << scenario << ',' << (m.completion_time ? format_double(*m.completion_time) : "") << ','
        << format_double(m.avg_accel) << ',' << format_double(m.cross_error) << '\n';
}

void write_stiffness(std::ostream& out, const std::vector<harness::StiffnessRow>& rows) {
    out << "kappa,A_aa,rise_time,overshoot\n";
    for (const auto& r : rows)
        out << format_double(r.kappa) << ',' << format_double(r.a_aa) << ',' << format_double(r.rise_time) << ','
            << format_double(r.overshoot) << '\n';
}

void write_velocity_space(std::ostream& out, const std::vector<harness::VelocityPoint>& points) {
    out << "v,w,context\n";
    for (const auto& p : points)
        out << format_double(p.v) << ',' << format_double(p.w) << ',' << to_string(p.context) << '\n';
}

json read_json(const std::filesystem::path& file) {
    auto in = open_in(file);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

} // namespace torso::io
