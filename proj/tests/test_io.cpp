#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "torso/error.hpp"
#include "torso/io.hpp"

using namespace torso;
using namespace torso::io;

TEST_CASE("profile JSON round trip") {
    harness::SyntheticUser user;
    user.alpha = {1.3, 0.7, 1.0, 1.1, 0.95};
    auto p = user.ideal_profile();
    p.theta_offset_deg = 1.25;
    p.f1_coeffs = {-0.1, 0.02, 0.97};
    const auto back = profile_from_json(to_json(p));
    CHECK(back.alpha == p.alpha);
    CHECK(back.beta == p.beta);
    CHECK(back.delta_ref == p.delta_ref);
    CHECK(back.f1_coeffs == p.f1_coeffs);
    CHECK(back.zero_offsets == p.zero_offsets);
    CHECK(back.theta_offset_deg == p.theta_offset_deg);
    CHECK(back.layout.s == p.layout.s);

    auto j = to_json(p);
    j["beta"] = {0.1, 0.0, 0.2, 0.3};
    CHECK_THROWS_AS(profile_from_json(j), ConfigError);
}

TEST_CASE("mapping overrides") {
    MappingParams base;
    base.v_max = 1.5;
    const auto m = mapping_from_json(json{{"w_max", 0.5}}, base);
    CHECK(m.v_max == 1.5);
    CHECK(m.w_max == 0.5);
    const auto back = mapping_from_json(to_json(m));
    CHECK(back.v_max == 1.5);
    CHECK(back.literal_eq12 == m.literal_eq12);
    CHECK_THROWS_AS(mapping_from_json(json{{"vmax", 2.0}}), ConfigError);
    CHECK_THROWS_AS(mapping_from_json(json{{"rho", 3.0}}), ConfigError);
}

TEST_CASE("coupling and path round trips") {
    coupling::Params p;
    p.kappa = 3100.0;
    const auto cp = coupling_from_json(to_json(p));
    CHECK(cp.kappa == 3100.0);
    CHECK(cp.m == p.m);

    const auto path = vehicle::build_figure8(3.0, 0.8);
    const auto back = path_from_json(to_json(path));
    CHECK(back.length() == doctest::Approx(path.length()).epsilon(1e-12));
    REQUIRE(back.waypoints.size() == path.waypoints.size());
    CHECK(back.waypoints[100].x == path.waypoints[100].x);
    CHECK(back.segments.size() == path.segments.size());
}

TEST_CASE("frames and traces as JSON Lines") {
    std::vector<SensorFrame> frames{{0.0, {1, 2, 3, 4, 5}, 0.5}, {0.02, {10, 20, 30, 40, 50}, -1.5}};
    std::stringstream ss;
    write_frames(ss, frames);
    const auto back = read_frames(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].raw == frames[1].raw);
    CHECK(back[1].theta_b_deg == -1.5);

    std::stringstream bad("{\"t\":0,\"raw\":\"x\"}\n");
    CHECK_THROWS_AS(read_frames(bad), InputError);

    vehicle::RunTrace tr;
    tr.samples.push_back({0.0, {0.1, 0.2, 0.3}, 0.4, -0.5});
    tr.samples.push_back({0.02, {1.0 / 3.0, 2.0, -3.0}, 0.1, 0.7});
    std::stringstream ts;
    write_trace(ts, tr);
    const auto tb = read_trace(ts);
    REQUIRE(tb.samples.size() == 2);
    CHECK(tb.samples[1].pose == tr.samples[1].pose);
    CHECK(tb.samples[1].w == tr.samples[1].w);
}

TEST_CASE("CSV reports") {
    std::stringstream ss;
    write_metrics_header(ss);
    write_metrics_row(ss, "figure8", {48.5, 0.25, 0.031});
    write_metrics_row(ss, "circle", {std::nullopt, 0.1, 0.2});
    CHECK(ss.str() == "scenario,CT,A_a,A_e\nfigure8,48.5,0.25,0.031\ncircle,,0.1,0.2\n");

    std::stringstream st;
    write_stiffness(st, {{2000.0, 4.5, 1.25, 0.0, false, 0.0}});
    CHECK(st.str() == "kappa,A_aa,rise_time,overshoot\n2000,4.5,1.25,0\n");

    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    const double x = 1.0 / 7.0;
    CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("config file sections") {
    const auto c = config_from_json(json{{"mapping", {{"v_max", 0.8}}},
                                         {"coupling", {{"kappa", 2500.0}}},
                                         {"scenario", {{"course", "circle"}, {"seed", 7}}}});
    CHECK_FALSE(c.profile.has_value());
    CHECK(c.mapping.v_max == 0.8);
    CHECK(c.coupling.kappa == 2500.0);
    const auto sc = scenario_from_json(c.scenario, harness::default_scenario());
    CHECK(sc.name == "circle");
    CHECK(sc.seed == 7);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InputError);
}
