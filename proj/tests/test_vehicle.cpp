#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "torso/error.hpp"
#include "torso/vehicle.hpp"

using namespace torso;
using namespace torso::vehicle;

namespace {

constexpr double kPi = std::numbers::pi;

// Trace that slides along the path at constant speed.
RunTrace follower(const PathSpec& path, double speed, double dt, double extra = 0.0) {
    RunTrace tr;
    const double t_end = path.length() / speed + extra;
    for (int i = 0; i * dt <= t_end + 1e-12; ++i) {
        const double t = i * dt;
        const auto p = path.point_at(speed * t);
        tr.samples.push_back({t, {p.x, p.y, 0.0}, speed, 0.0});
    }
    return tr;
}

RunTrace circle_trace(double radius, int n) {
    RunTrace tr;
    for (int i = 0; i <= n; ++i) {
        const double a = -kPi / 2.0 + 2.0 * kPi * i / n;
        tr.samples.push_back({0.02 * i, {radius * std::cos(a), radius * std::sin(a), 0.0}, 0.5, 0.0});
    }
    return tr;
}

} // namespace

TEST_CASE("unicycle update") {
    auto p = integrate_unicycle({}, 1.0, 0.0, 1.0);
    CHECK(p.x == doctest::Approx(1.0));
    CHECK(p.y == doctest::Approx(0.0));
    // Negative w turns left on a circle of radius v / |w|.
    p = integrate_unicycle({}, 1.0, -1.0, kPi / 2.0);
    CHECK(p.x == doctest::Approx(1.0));
    CHECK(p.y == doctest::Approx(1.0));
    CHECK(p.heading == doctest::Approx(kPi / 2.0));
    p = integrate_unicycle({}, 1.0, 1.0, kPi / 2.0);
    CHECK(p.y == doctest::Approx(-1.0));
    CHECK(p.heading == doctest::Approx(-kPi / 2.0));
    // Spin in place.
    p = integrate_unicycle({}, 0.0, 0.5, 1.0);
    CHECK(p.x == 0.0);
    CHECK(p.heading == doctest::Approx(-0.5));
    CHECK_THROWS_AS(integrate_unicycle({}, 1.0, 0.0, 0.0), InputError);
}

TEST_CASE("constant-twist steps compose exactly") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double v = u(rng);
        const double w = u(rng);
        const Pose start{u(rng), u(rng), u(rng) * kPi};
        const auto once = integrate_unicycle(start, v, w, 0.4);
        const auto twice = integrate_unicycle(integrate_unicycle(start, v, w, 0.25), v, w, 0.15);
        CHECK(once.x == doctest::Approx(twice.x).epsilon(1e-12));
        CHECK(once.y == doctest::Approx(twice.y).epsilon(1e-12));
        CHECK(std::abs(normalize_angle(once.heading - twice.heading)) < 1e-12);
        CHECK(once.heading > -kPi);
        CHECK(once.heading <= kPi);
    }
}

TEST_CASE("figure-8 geometry") {
    const auto path = build_figure8(4.0, 1.0);
    CHECK(path.length() == doctest::Approx(12.0 + 4.0 * kPi).epsilon(1e-9));
    CHECK(path.length() == doctest::Approx(24.566).epsilon(1e-4));
    CHECK(path.waypoints.front().x == path.waypoints.back().x);
    CHECK(path.waypoints.front().y == path.waypoints.back().y);
    CHECK(path.segments.size() == 7);
    REQUIRE(path.arc_length.size() == path.waypoints.size());
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const double d = std::hypot(path.waypoints[i].x - path.waypoints[i - 1].x,
                                    path.waypoints[i].y - path.waypoints[i - 1].y);
        CHECK(d <= kMaxWaypointSpacing + 1e-12);
        CHECK(path.arc_length[i] > path.arc_length[i - 1]);
    }
    CHECK(path.start_heading() == doctest::Approx(0.0));
    CHECK_THROWS_AS(build_figure8(0.0, 1.0), InputError);

    const auto circle = build_circle(2.0);
    CHECK(circle.length() == doctest::Approx(4.0 * kPi).epsilon(1e-9));
}

TEST_CASE("cross-track error oracles") {
    const auto path = build_figure8();
    const auto on = follower(path, 0.5, 0.02);
    CHECK(cross_error(on, path).mean < 1e-9);

    const auto circle = build_circle(1.0);
    const auto off = cross_error(circle_trace(1.1, 2000), circle);
    CHECK(off.mean == doctest::Approx(0.100).epsilon(0.01));
    CHECK(std::abs(off.mean - 0.1) <= 1e-3);
    CHECK(off.skipped == 0);

    const auto in = cross_error(circle_trace(0.95, 2000), circle);
    CHECK(std::abs(in.mean - 0.05) <= 1e-3);
}

TEST_CASE("cross-track error matches a brute-force nearest segment away from the crossing") {
    const auto path = build_figure8();
    std::mt19937_64 rng(9);
    std::normal_distribution<double> jitter(0.0, 0.03);
    auto tr = follower(path, 0.5, 0.02);
    for (auto& s : tr.samples) {
        s.pose.x += jitter(rng);
        s.pose.y += jitter(rng);
    }
    const auto ce = cross_error(tr, path);
    REQUIRE(ce.per_sample.size() == tr.samples.size());
    std::size_t compared = 0;
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const Point p{tr.samples[i].pose.x, tr.samples[i].pose.y};
        // The lobes touch at (0, 2): near there the nearest segment may belong to the other lobe.
        if (std::hypot(p.x, p.y - 2.0) < 0.5 || std::hypot(p.x, p.y) < 0.3) continue;
        const double ref = oracle::nearest_segment_distance(p, path);
        CHECK(ce.per_sample[i] == doctest::Approx(ref).epsilon(1e-3).scale(1e-3));
        ++compared;
    }
    CHECK(compared > tr.samples.size() / 2);
}

TEST_CASE("cross-track error is invariant under rigid motion") {
    const auto base = build_circle(1.0);
    const auto tr = circle_trace(1.07, 1000);
    const double ref = cross_error(tr, base).mean;
    const double ang = 0.7;
    const double dx = 3.0;
    const double dy = -2.0;
    auto move = [&](Point p) {
        return Point{std::cos(ang) * p.x - std::sin(ang) * p.y + dx, std::sin(ang) * p.x + std::cos(ang) * p.y + dy};
    };
    std::vector<Segment> segs{Arc{move({0.0, 0.0}), 1.0, -kPi / 2.0 + ang, 2.0 * kPi}};
    const auto moved_path = sample_path(segs);
    auto moved = tr;
    for (auto& s : moved.samples) {
        const auto p = move({s.pose.x, s.pose.y});
        s.pose.x = p.x;
        s.pose.y = p.y;
    }
    CHECK(cross_error(moved, moved_path).mean == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("average command acceleration") {
    RunTrace ramp;
    for (int i = 0; i <= 100; ++i) ramp.samples.push_back({0.1 * i, {}, 0.01 * i, 0.0});
    // Hand evaluation: 100 differences of 0.01 / 0.1 s = 0.1 m/s^2 each, over 2 * 10 s.
    const double hand = 100.0 * 0.1 / (2.0 * 10.0);
    CHECK(avg_accel(ramp) == doctest::Approx(hand).epsilon(1e-12));
    CHECK(avg_accel(ramp) == doctest::Approx(0.5).epsilon(1e-12));

    auto doubled = ramp;
    for (auto& s : doubled.samples) {
        s.v *= 2.0;
        s.w = -0.5 * s.t;
    }
    auto reversed = doubled;
    const double t_end = reversed.samples.back().t;
    std::reverse(reversed.samples.begin(), reversed.samples.end());
    for (auto& s : reversed.samples) s.t = t_end - s.t;
    CHECK(avg_accel(reversed) == doctest::Approx(avg_accel(doubled)).epsilon(1e-12));

    auto scaled = ramp;
    for (auto& s : scaled.samples) s.v *= 2.0;
    CHECK(avg_accel(scaled) == doctest::Approx(2.0 * avg_accel(ramp)).epsilon(1e-12));

    RunTrace flat;
    for (int i = 0; i <= 10; ++i) flat.samples.push_back({0.1 * i, {}, 0.3, -0.2});
    CHECK(avg_accel(flat) == 0.0);

    RunTrace bad = flat;
    bad.samples[3].t = bad.samples[2].t;
    CHECK_THROWS_AS(avg_accel(bad), InputError);
    CHECK_THROWS_AS(avg_accel(RunTrace{}), InputError);
}

TEST_CASE("completion time") {
    const auto path = build_figure8();
    const auto tr = follower(path, 0.5, 0.01, 2.0);
    const auto ct = completion_time(tr, path);
    REQUIRE(ct.has_value());
    // Clock runs from leaving the 0.2 m start disk to entering the finish disk.
    CHECK(*ct == doctest::Approx((path.length() - 0.4) / 0.5).epsilon(1e-3));

    // Faster follower finishes sooner.
    const auto fast = completion_time(follower(path, 1.0, 0.01, 1.0), path);
    REQUIRE(fast.has_value());
    CHECK(*fast < *ct);

    // Stopping half way never completes.
    RunTrace half;
    for (const auto& s : tr.samples)
        if (s.t < 20.0) half.samples.push_back(s);
    CHECK_FALSE(completion_time(half, path).has_value());

    // Cutting the course short: jump from the start region straight back to the finish.
    RunTrace cheat;
    cheat.samples.push_back({0.0, {0.0, 0.0, 0.0}, 0.0, 0.0});
    cheat.samples.push_back({1.0, {0.5, 0.0, 0.0}, 0.0, 0.0});
    cheat.samples.push_back({2.0, {0.0, 0.0, 0.0}, 0.0, 0.0});
    CHECK_FALSE(completion_time(cheat, path).has_value());

    const auto m = evaluate(tr, path);
    CHECK(m.completion_time == ct);
    CHECK(m.cross_error < 1e-9);
    CHECK(m.avg_accel == 0.0);
}

TEST_CASE("progress tracker stays on its lobe through the crossing") {
    const auto path = build_figure8();
    ProgressTracker tracker(path);
    double last = 0.0;
    for (const auto& s : follower(path, 0.5, 0.02).samples) {
        tracker.update({s.pose.x, s.pose.y});
        CHECK(tracker.progress() >= last);
        last = tracker.progress();
    }
    CHECK(last == doctest::Approx(1.0).epsilon(1e-3));
}
