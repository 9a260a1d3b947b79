#include "torso/telemetry.hpp"

#include <cmath>

#include "torso/error.hpp"
#include "torso/io.hpp"

namespace torso::telemetry {

namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

double finite(double v) { return std::isfinite(v) ? v : 0.0; }

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw InputError(std::string("'") + key + "' must be a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw InputError(std::string("'") + key + "' must be finite");
    return v;
}

} // namespace

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::Idle: return "Idle";
    case Mode::Running: return "Running";
    case Mode::SafetyStopped: return "SafetyStopped";
    }
    return "Idle";
}

Mode mode_from_string(std::string_view s) {
    if (s == "Idle") return Mode::Idle;
    if (s == "Running") return Mode::Running;
    if (s == "SafetyStopped") return Mode::SafetyStopped;
    throw InputError("unknown mode: " + std::string(s));
}

std::string telemetry_encode(const SessionState& s) {
    json fsr = json::array();
    for (double v : s.fsr) fsr.push_back(finite(v));
    json j{{"type", "telemetry"},
           {"t", finite(s.t)},
           {"mode", to_string(s.mode)},
           {"pose", {{"x", finite(s.pose.x)}, {"y", finite(s.pose.y)}, {"heading", finite(s.pose.heading)}}},
           {"cmd", {{"v", finite(s.cmd.v)}, {"w", finite(s.cmd.w)}, {"gate", to_string(s.cmd.gate)}}},
           {"cop", s.cop ? json(finite(*s.cop)) : json(nullptr)},
           {"p", finite(s.p)},
           {"theta_b", finite(s.theta_b)},
           {"category", s.category ? json(to_string(*s.category)) : json(nullptr)},
           {"fsr", fsr},
           {"path_progress", finite(s.path_progress)}};
    return j.dump();
}

SessionState telemetry_decode(const std::string& msg) {
    json j;
    try {
        j = json::parse(msg);
    } catch (const json::exception& e) {
        throw InputError(std::string("telemetry is not JSON: ") + e.what());
    }
    try {
        SessionState s;
        s.t = j.at("t").get<double>();
        s.mode = mode_from_string(j.at("mode").get<std::string>());
        const auto& pose = j.at("pose");
        s.pose = {pose.at("x").get<double>(), pose.at("y").get<double>(), pose.at("heading").get<double>()};
        const auto& cmd = j.at("cmd");
        s.cmd.v = cmd.at("v").get<double>();
        s.cmd.w = cmd.at("w").get<double>();
        if (cmd.contains("gate")) s.cmd.gate = gate_from_string(cmd["gate"].get<std::string>());
        if (!j.at("cop").is_null()) s.cop = j["cop"].get<double>();
        s.p = j.at("p").get<double>();
        s.theta_b = j.at("theta_b").get<double>();
        if (!j.at("category").is_null()) s.category = posture_from_string(j["category"].get<std::string>());
        s.fsr = j.at("fsr").get<std::vector<double>>();
        s.path_progress = j.at("path_progress").get<double>();
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed telemetry: ") + e.what());
    }
}

ClientCommand parse_command(const std::string& msg) {
    json j;
    try {
        j = json::parse(msg);
    } catch (const json::exception& e) {
        throw InputError(std::string("command is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("command must be a JSON object");
    if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kProtocolVersion)
        throw InputError("unsupported or missing protocol version (expected \"v\":1)");
    if (!j.contains("type") || !j["type"].is_string()) throw InputError("command needs a string 'type'");
    const auto type = j["type"].get<std::string>();

    if (type == "SetPosture") {
        SetPosture c;
        if (j.contains("lambda")) {
            if (!j["lambda"].is_array()) throw InputError("'lambda' must be an array");
            std::vector<double> lambda;
            for (const auto& x : j["lambda"]) {
                if (!x.is_number()) throw InputError("'lambda' entries must be numbers");
                const double v = x.get<double>();
                if (!std::isfinite(v) || v < 0.0) throw InputError("'lambda' entries must be finite and >= 0");
                lambda.push_back(v);
            }
            c.lambda = std::move(lambda);
        } else if (j.contains("category")) {
            if (!j["category"].is_string()) throw InputError("'category' must be a string");
            harness::Intent intent;
            intent.category = posture_from_string(j["category"].get<std::string>());
            intent.intensity = j.contains("intensity") ? number(j, "intensity") : 0.0;
            intent.bias = j.contains("bias") ? number(j, "bias") : 0.0;
            if (intent.intensity < 0.0 || intent.intensity > 1.0) throw InputError("'intensity' must lie in [0, 1]");
            if (intent.bias < -1.0 || intent.bias > 1.0) throw InputError("'bias' must lie in [-1, 1]");
            c.intent = intent;
        } else {
            throw InputError("SetPosture needs 'lambda' or 'category'");
        }
        return c;
    }
    if (type == "SetBendAngle") return SetBendAngle{number(j, "deg")};
    if (type == "Start") return Start{};
    if (type == "Stop") return Stop{};
    if (type == "Reset") return Reset{};
    if (type == "SetParams") {
        if (!j.contains("mapping") || !j["mapping"].is_object()) throw InputError("SetParams needs a 'mapping' object");
        return SetParams{j["mapping"]};
    }
    throw InputError("unknown command type '" + type + "'");
}

std::string encode_command(const ClientCommand& cmd) {
    json j{{"v", kProtocolVersion}};
    std::visit(Overloaded{[&](const SetPosture& c) {
                              j["type"] = "SetPosture";
                              if (c.lambda) j["lambda"] = *c.lambda;
                              if (c.intent) {
                                  j["category"] = to_string(c.intent->category);
                                  j["intensity"] = c.intent->intensity;
                                  j["bias"] = c.intent->bias;
                              }
                          },
                          [&](const SetBendAngle& c) {
                              j["type"] = "SetBendAngle";
                              j["deg"] = c.deg;
                          },
                          [&](const Start&) { j["type"] = "Start"; },
                          [&](const Stop&) { j["type"] = "Stop"; },
                          [&](const Reset&) { j["type"] = "Reset"; },
                          [&](const SetParams& c) {
                              j["type"] = "SetParams";
                              j["mapping"] = c.mapping;
                          }},
               cmd);
    return j.dump();
}

std::string error_frame(const std::string& message) { return json{{"type", "error"}, {"message", message}}.dump(); }

LiveSession::LiveSession(MappingParams params, harness::SyntheticUser user, double straight_len, double radius)
    : user_(std::move(user)),
      path_(vehicle::build_figure8(straight_len, radius)),
      pipeline_(user_.ideal_profile(params.theta_fm_default), params),
      tracker_(path_) {
    reset();
}

void LiveSession::reset() {
    pipeline_.reset();
    tracker_ = vehicle::ProgressTracker(path_);
    posture_ = {};
    bend_deg_.reset();
    const double t = state_.t;
    state_ = {};
    state_.t = t;
    state_.pose = {path_.start().x, path_.start().y, path_.start_heading()};
    state_.fsr.assign(user_.layout.n(), 0.0);
    trace_ = {};
    trace_.scenario = "live";
}

void LiveSession::apply(const ClientCommand& cmd) {
    std::visit(Overloaded{[&](const SetPosture& c) {
                              if (c.lambda && c.lambda->size() != user_.layout.n())
                                  throw InputError("'lambda' must have one entry per sensor");
                              posture_ = c;
                              // A posture intent carries its own bend unless an angle is pinned later.
                              if (c.intent) bend_deg_.reset();
                          },
                          [&](const SetBendAngle& c) { bend_deg_ = c.deg; },
                          [&](const Start&) {
                              if (state_.mode == Mode::SafetyStopped)
                                  throw InputError("session is safety-stopped; send Reset first");
                              state_.mode = Mode::Running;
                          },
                          [&](const Stop&) {
                              if (state_.mode == Mode::Running) {
                                  state_.mode = Mode::Idle;
                                  pipeline_.reset();
                                  state_.cmd = {};
                              }
                          },
                          [&](const Reset&) { reset(); },
                          [&](const SetParams& c) { pipeline_.set_params(io::mapping_from_json(c.mapping, params())); }},
               cmd);
}

SensorFrame LiveSession::current_frame() const {
    const auto& params = pipeline_.params();
    std::vector<double> pressure(user_.layout.n(), 0.0);
    double theta = 0.0;
    if (posture_.lambda) {
        pressure = *posture_.lambda;
    } else if (posture_.intent && posture_.intent->intensity > 0.0) {
        const double cop = harness::cop_for_intent(*posture_.intent, user_);
        pressure = user_.pressure_pattern(cop);
        const double budget = forward_max_angle(cop, pipeline_.profile(), params);
        theta = params.theta_ft + posture_.intent->intensity * (budget - params.theta_ft);
    }
    if (bend_deg_) theta = *bend_deg_;
    return user_.frame(state_.t, pressure, theta, nullptr);
}

void LiveSession::tick(double dt) {
    if (!(dt > 0.0)) throw InputError("tick step must be positive");
    state_.t += dt;
    const auto frame = current_frame();
    TickResult r;
    if (state_.mode == Mode::Running) {
        r = pipeline_.tick(frame, dt);
        if (r.raw.gate == Gate::SafetyStop) {
            state_.mode = Mode::SafetyStopped;
            pipeline_.reset();
            state_.cmd = {0.0, 0.0, Gate::SafetyStop};
        } else {
            state_.cmd = r.command;
            state_.pose = vehicle::integrate_unicycle(state_.pose, r.command.v, r.command.w, dt);
            tracker_.update({state_.pose.x, state_.pose.y});
            trace_.samples.push_back({state_.t, state_.pose, r.command.v, r.command.w});
        }
    } else {
        // Display only: the filter state is left untouched while not driving.
        r = pipeline_tick(frame, pipeline_.profile(), pipeline_.params(), {}, dt);
        state_.cmd = {0.0, 0.0, state_.mode == Mode::SafetyStopped ? Gate::SafetyStop : r.raw.gate};
    }
    state_.cop = r.cop;
    state_.p = r.p;
    state_.theta_b = r.theta_b_deg;
    state_.category = r.category;
    state_.fsr = r.lambda;
    state_.path_progress = tracker_.progress();
}

bool RateLimiter::allow(double t) {
    // Small slack keeps exact multiples of the tick period from being rejected on rounding.
    if (last_ && t - *last_ < period_ - 1e-9) return false;
    last_ = t;
    return true;
}

} // namespace torso::telemetry
