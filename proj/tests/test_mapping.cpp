#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "torso/error.hpp"
#include "torso/mapping.hpp"

using namespace torso;

namespace {
const Boundaries kBeta{-0.6, -0.2, 0.2, 0.6};
}

TEST_CASE("magnitude curve endpoints and spot value") {
    const MappingParams p;
    CHECK(std::abs(magnitude(3.0, 25.0, p).p) < 1e-12);
    CHECK(magnitude(25.0, 25.0, p).p == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(magnitude(14.0, 25.0, p).p == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(magnitude(14.0, 25.0, p).p == doctest::Approx(oracle::magnitude_hand(14.0, 3.0, 25.0, 0.75)));
    CHECK(magnitude(-15.0, 25.0, p).p == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(magnitude(-15.0, 25.0, p).context == BendContext::Backward);
    CHECK(magnitude(0.0, 25.0, p).context == BendContext::Dead);
    CHECK(magnitude(3.0, 25.0, p).context == BendContext::Dead);
    CHECK(magnitude(-3.0, 25.0, p).context == BendContext::Dead);
    CHECK(magnitude(45.0, 25.0, p).context == BendContext::Safety);
    CHECK(magnitude(45.0, 25.0, p).p == 0.0);
    CHECK(magnitude(-26.0, 25.0, p).context == BendContext::Safety);
    // Between the forward maximum and the safety threshold the magnitude saturates.
    CHECK(magnitude(35.0, 25.0, p).p == 1.0);
    CHECK_THROWS_AS(magnitude(10.0, 3.0, p), ConfigError);
    CHECK_THROWS_AS(magnitude(10.0, 41.0, p), ConfigError);
}

TEST_CASE("magnitude is strictly increasing on the forward ramp and matches the hand oracle") {
    const MappingParams p;
    for (double fm : {10.0, 18.0, 25.0, 37.5}) {
        double prev = -1.0;
        for (int i = 0; i <= 2000; ++i) {
            const double th = 3.0 + (fm - 3.0) * i / 2000.0;
            const double m = magnitude(th, fm, p).p;
            if (i > 0) CHECK(m > prev);
            CHECK(m == doctest::Approx(std::clamp(oracle::magnitude_hand(th, 3.0, fm, 0.75), 0.0, 1.0)).epsilon(1e-12));
            prev = m;
        }
    }
}

TEST_CASE("forward maximum angle") {
    MappingParams p;
    auto prof = CalibrationProfile::identity();
    CHECK(forward_max_angle(0.3, prof, p) == 25.0);
    prof.f1_coeffs = {0.0, 0.0, 1.5};
    CHECK(forward_max_angle(0.0, prof, p) == 37.5);
    prof.f1_coeffs = {0.0, 0.0, 9.0};
    CHECK(forward_max_angle(0.0, prof, p) == 37.5);
    p.theta_fst = 30.0;
    CHECK(forward_max_angle(0.0, prof, p) == 30.0);
}

TEST_CASE("weights at the named points") {
    auto w = weights(-0.2, kBeta);
    CHECK(w.w_v == doctest::Approx(1.0));
    CHECK(w.w_w == doctest::Approx(0.0));
    w = weights(-0.4, kBeta);
    CHECK(w.w_v == doctest::Approx(0.5));
    CHECK(w.w_w == doctest::Approx(-0.5));
    w = weights(-0.6, kBeta);
    CHECK(w.w_v == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w.w_w == doctest::Approx(-1.0));
    w = weights(0.6, kBeta);
    CHECK(w.w_v == 0.0);
    CHECK(w.w_w == 1.0);
    w = weights(0.4, kBeta);
    CHECK(w.w_v == doctest::Approx(0.5));
    CHECK(w.w_w == doctest::Approx(0.5));
    CHECK(weights(-0.9, kBeta).w_w == -1.0);
    CHECK(weights(0.0, kBeta).w_v == 1.0);
}

TEST_CASE("weights are continuous, and C1 at the plateau junctions") {
    const int n = 100000;
    double jump_v = 0.0;
    double jump_w = 0.0;
    auto prev = weights(-1.0, kBeta);
    const double h = 2.0 / n;
    for (int i = 1; i <= n; ++i) {
        const auto w = weights(-1.0 + i * h, kBeta);
        jump_v = std::max(jump_v, std::abs(w.w_v - prev.w_v));
        jump_w = std::max(jump_w, std::abs(w.w_w - prev.w_w));
        prev = w;
    }
    // Largest sinusoid slope is pi/2 / 0.4 per unit COP.
    const double lip = 0.5 * M_PI / 0.4 * h;
    CHECK(jump_v <= lip * 1.0001);
    CHECK(jump_w <= lip * 1.0001);

    for (double b : {kBeta[1], kBeta[2]}) {
        const double e = 1e-6;
        const auto l = weights(b - e, kBeta);
        const auto r = weights(b + e, kBeta);
        const auto c = weights(b, kBeta);
        CHECK(std::abs((c.w_v - l.w_v) / e) < 1e-4);
        CHECK(std::abs((r.w_v - c.w_v) / e) < 1e-4);
        CHECK(std::abs((c.w_w - l.w_w) / e) < 1e-4);
        CHECK(std::abs((r.w_w - c.w_w) / e) < 1e-4);
    }
}

TEST_CASE("literal right-turn angular weight jumps by one at beta_3") {
    const double e = 1e-12;
    const auto below = weights(kBeta[2] - e, kBeta, true);
    const auto at = weights(kBeta[2], kBeta, true);
    CHECK(std::abs(at.w_w - below.w_w) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(weights(kBeta[3] - e, kBeta, true).w_w == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("commands per context") {
    const MappingParams p;
    auto c = command({1.0, BendContext::Forward}, -0.2, kBeta, p);
    CHECK(c.v == doctest::Approx(1.0));
    CHECK(c.w == doctest::Approx(0.0));
    c = command({1.0, BendContext::Backward}, 0.9, kBeta, p);
    CHECK(c.v == doctest::Approx(-0.8));
    CHECK(c.w == 0.0);
    c = command({0.7, BendContext::Safety}, 0.0, kBeta, p);
    CHECK(c == VelocityCommand{0.0, 0.0, Gate::SafetyStop});
    c = command({0.0, BendContext::Dead}, 0.0, kBeta, p);
    CHECK(c == VelocityCommand{0.0, 0.0, Gate::Normal});
    // Left-turn posture yaws left, which is negative w.
    c = command({0.8, BendContext::Forward}, -0.4, kBeta, p);
    CHECK(c.v > 0.0);
    CHECK(c.w < 0.0);
}

TEST_CASE("command bounds hold over random inputs") {
    MappingParams p;
    p.v_max = 1.7;
    p.w_max = 0.6;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> cop(-1.5, 1.5);
    std::uniform_real_distribution<double> theta(-30.0, 45.0);
    for (int i = 0; i < 20000; ++i) {
        const double d = cop(rng);
        const auto mag = magnitude(theta(rng), 25.0, p);
        CHECK(mag.p >= 0.0);
        CHECK(mag.p <= 1.0);
        const auto c = command(mag, d, kBeta, p);
        CHECK(std::abs(c.v) <= p.v_max);
        CHECK(std::abs(c.w) <= p.w_max);
        if (mag.context == BendContext::Backward) CHECK(c.w == 0.0);
        if (c.gate != Gate::Normal) CHECK((c.v == 0.0 && c.w == 0.0));
    }
}

TEST_CASE("smoothing recursion") {
    const MappingParams p;
    VelocityCommand prev;
    const VelocityCommand step{1.0, -0.5, Gate::Normal};
    double ref_v = 0.0;
    double ref_w = 0.0;
    for (int k = 1; k <= 100; ++k) {
        prev = smooth(step, prev, 0.02, p);
        ref_v = 0.1 * 1.0 + 0.9 * ref_v;
        ref_w = 0.1 * -0.5 + 0.9 * ref_w;
        CHECK(std::abs(prev.v - ref_v) < 1e-12);
        CHECK(std::abs(prev.w - ref_w) < 1e-12);
        CHECK(std::abs(prev.v - (1.0 - std::pow(0.9, k))) < 1e-12);
    }
    CHECK(smooth(step, {}, 0.02, p).v == doctest::Approx(0.1));
    CHECK(smooth({0, 0, Gate::SafetyStop}, {0.9, 0.4, Gate::Normal}, 0.02, p) == VelocityCommand{0, 0, Gate::SafetyStop});
    CHECK(smooth({0, 0, Gate::NoContact}, {0.9, 0.4, Gate::Normal}, 0.02, p) == VelocityCommand{0, 0, Gate::NoContact});
    CHECK_THROWS_AS(smooth(step, prev, 0.0, p), InputError);

    // Bounded input, bounded output.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VelocityCommand s;
    for (int i = 0; i < 5000; ++i) {
        s = smooth({u(rng), u(rng), Gate::Normal}, s, 0.02, p);
        CHECK(std::abs(s.v) <= 1.0);
        CHECK(std::abs(s.w) <= 1.0);
    }
}

namespace {

SensorFrame frame_for(const std::vector<double>& lambda, double theta) {
    const AdcCircuit c;
    SensorFrame f;
    for (double l : lambda) f.raw.push_back(l / c.conductance_full * c.full_scale);
    f.theta_b_deg = theta;
    return f;
}

} // namespace

TEST_CASE("pipeline composition") {
    const MappingParams p;
    const auto prof = CalibrationProfile::identity();
    PipelineSession s(prof, p);
    auto r = s.tick(frame_for({0, 0, 0, 0, 0}, 0.0), 0.02);
    CHECK(r.command == VelocityCommand{0, 0, Gate::NoContact});
    CHECK_FALSE(r.cop.has_value());

    // Forward bend at the maximum over the centre sensors settles at v_max.
    for (int i = 0; i < 400; ++i) r = s.tick(frame_for({0, 0.5, 1, 0.5, 0}, 25.0), 0.02);
    CHECK(r.command.v == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.command.w == doctest::Approx(0.0));
    CHECK(r.category == PostureCategory::BendForward);

    // Scaling every conductance leaves the command unchanged.
    auto a = pipeline_tick(frame_for({0.1, 0.8, 0.3, 0, 0}, 12.0), prof, p, {}, 0.02);
    auto b = pipeline_tick(frame_for({0.2, 1.6, 0.6, 0, 0}, 12.0), prof, p, {}, 0.02);
    CHECK(a.command.v == doctest::Approx(b.command.v).epsilon(1e-3));
    CHECK(a.command.w == doctest::Approx(b.command.w).epsilon(1e-3));
    CHECK(a.command.w < 0.0);

    // Safety beats lost contact.
    r = s.tick(frame_for({0, 0, 0, 0, 0}, 45.0), 0.02);
    CHECK(r.command == VelocityCommand{0, 0, Gate::SafetyStop});
    r = s.tick(frame_for({0, 0, 1, 0, 0}, 45.0), 0.02);
    CHECK(r.command == VelocityCommand{0, 0, Gate::SafetyStop});
    s.reset();
    CHECK(s.last_command() == VelocityCommand{});
}

TEST_CASE("mapping parameter validation") {
    MappingParams p;
    CHECK_NOTHROW(p.validate());
    p.theta_bm = -2.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.rho = 2.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.w_v_back = 0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.k_v_d = 0.2;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(gate_from_string("SafetyStop") == Gate::SafetyStop);
    CHECK_THROWS_AS(gate_from_string("Halt"), InputError);
}
