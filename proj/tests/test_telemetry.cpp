#include <doctest.h>

#include <cmath>
#include <limits>

#include "torso/error.hpp"
#include "torso/telemetry.hpp"

using namespace torso;
using namespace torso::telemetry;

TEST_CASE("telemetry codec round trip") {
    SessionState s;
    s.t = 12.34;
    s.mode = Mode::Running;
    s.pose = {1.5, -0.25, 0.75};
    s.cmd = {0.6, -0.2, Gate::Normal};
    s.cop = -0.35;
    s.p = 0.62;
    s.theta_b = 13.5;
    s.category = PostureCategory::TurnLeft;
    s.fsr = {0.0, 0.4, 1.0, 0.0, 0.0};
    s.path_progress = 0.42;
    CHECK(telemetry_decode(telemetry_encode(s)) == s);

    SessionState empty;
    empty.fsr = {0, 0, 0, 0, 0};
    const auto back = telemetry_decode(telemetry_encode(empty));
    CHECK_FALSE(back.cop.has_value());
    CHECK_FALSE(back.category.has_value());

    SessionState nan = empty;
    nan.p = std::numeric_limits<double>::quiet_NaN();
    const auto j = nlohmann::json::parse(telemetry_encode(nan));
    CHECK(j["p"] == 0.0);
    CHECK(j["type"] == "telemetry");
    CHECK_THROWS_AS(telemetry_decode("{\"t\":1}"), InputError);
}

TEST_CASE("client command parsing") {
    auto c = parse_command(R"({"v":1,"type":"SetBendAngle","deg":12.5})");
    CHECK(std::get<SetBendAngle>(c).deg == 12.5);
    c = parse_command(R"({"v":1,"type":"SetPosture","category":"TurnRight","intensity":0.5})");
    CHECK(std::get<SetPosture>(c).intent->category == PostureCategory::TurnRight);
    c = parse_command(R"({"v":1,"type":"SetPosture","lambda":[0,0.5,1,0,0]})");
    CHECK(std::get<SetPosture>(c).lambda->size() == 5);
    c = parse_command(R"({"v":1,"type":"SetParams","mapping":{"v_max":0.5}})");
    CHECK(std::get<SetParams>(c).mapping["v_max"] == 0.5);
    CHECK(std::holds_alternative<Start>(parse_command(R"({"v":1,"type":"Start"})")));

    for (const char* bad : {R"({"type":"Start"})", R"({"v":2,"type":"Start"})", R"({"v":1,"type":"Fly"})",
                            R"({"v":1,"type":"SetBendAngle"})", R"({"v":1,"type":"SetPosture","lambda":[-1]})",
                            R"({"v":1,"type":"SetPosture","category":"Hop"})",
                            R"({"v":1,"type":"SetPosture","category":"TurnLeft","intensity":2})", "[1,2]",
                            "not json"})
        CHECK_THROWS_AS(parse_command(bad), std::invalid_argument);

    for (const ClientCommand& cmd : std::vector<ClientCommand>{SetBendAngle{3.0}, Start{}, Stop{}, Reset{},
                                                                SetParams{nlohmann::json{{"w_max", 0.4}}}})
        CHECK(parse_command(encode_command(cmd)).index() == cmd.index());

    const auto err = nlohmann::json::parse(error_frame("bad"));
    CHECK(err["type"] == "error");
}

TEST_CASE("live session drives and safety-stops") {
    LiveSession s;
    CHECK(s.state().mode == Mode::Idle);
    s.apply(SetPosture{std::nullopt, harness::Intent{PostureCategory::BendForward, 0.8, 0.0}});
    for (int i = 0; i < 10; ++i) s.tick();
    CHECK(s.state().mode == Mode::Idle);
    CHECK(s.state().cmd.v == 0.0);
    CHECK(s.state().p > 0.0); // display-only readings still update
    const auto start_pose = s.state().pose;

    s.apply(Start{});
    for (int i = 0; i < 50; ++i) s.tick();
    CHECK(s.state().mode == Mode::Running);
    CHECK(s.state().cmd.v > 0.0);
    CHECK(s.state().pose.x > start_pose.x);
    CHECK(s.state().path_progress > 0.0);
    CHECK(s.state().category == PostureCategory::BendForward);

    s.apply(SetBendAngle{45.0});
    s.tick();
    CHECK(s.state().mode == Mode::SafetyStopped);
    CHECK(s.state().cmd == VelocityCommand{0.0, 0.0, Gate::SafetyStop});
    const auto stopped = s.state().pose;
    CHECK_THROWS_AS(s.apply(Start{}), InputError);
    s.tick();
    CHECK(s.state().pose == stopped);

    s.apply(Reset{});
    CHECK(s.state().mode == Mode::Idle);
    CHECK(s.state().pose == start_pose);
    CHECK(s.state().path_progress == 0.0);
    s.apply(SetPosture{std::nullopt, harness::Intent{PostureCategory::BendForward, 0.5, 0.0}});
    CHECK_NOTHROW(s.apply(Start{}));
}

TEST_CASE("live session rejects bad updates and leaves state unchanged") {
    LiveSession s;
    const auto before = s.params();
    CHECK_THROWS_AS(s.apply(SetParams{nlohmann::json{{"rho", 5.0}}}), ConfigError);
    CHECK(s.params().rho == before.rho);
    CHECK_THROWS_AS(s.apply(SetPosture{std::vector<double>{1.0, 2.0}, std::nullopt}), InputError);
    s.apply(SetParams{nlohmann::json{{"v_max", 0.5}}});
    CHECK(s.params().v_max == 0.5);
    CHECK_THROWS_AS(s.tick(0.0), InputError);
}

TEST_CASE("rate limiter caps telemetry at 30 Hz") {
    RateLimiter lim(kTelemetryHz);
    int sent = 0;
    for (int i = 0; i < 50; ++i)
        if (lim.allow(i / kTickHz)) ++sent;
    CHECK(sent <= 31);
    CHECK(sent >= 20);

    RateLimiter fast(kTelemetryHz);
    int burst = 0;
    for (int i = 0; i < 1000; ++i)
        if (fast.allow(i * 1e-3)) ++burst;
    CHECK(burst <= 31);
}

TEST_CASE("bounded queue never exceeds its cap") {
    BoundedQueue<int> newest(4, Overflow::DropNewest);
    for (int i = 0; i < 10; ++i) newest.push(i);
    CHECK(newest.size() == 4);
    CHECK(newest.dropped() == 6);
    CHECK(*newest.try_pop() == 0);

    BoundedQueue<int> oldest(4, Overflow::DropOldest);
    for (int i = 0; i < 10; ++i) oldest.push(i);
    CHECK(oldest.size() == 4);
    CHECK(*oldest.try_pop() == 6);
    CHECK(oldest.pop_for(std::chrono::milliseconds(1)) == 7);

    BoundedQueue<int> def;
    CHECK(def.capacity() == 256);
    CHECK_FALSE(def.pop_for(std::chrono::milliseconds(1)).has_value());
}
