#include "torso/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "torso/error.hpp"

namespace torso::vehicle {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

} // namespace

double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * kPi); // [-pi, pi]
    return a <= -kPi ? a + 2.0 * kPi : a;
}

Pose integrate_unicycle(const Pose& pose, double v, double w, double dt) {
    if (!(dt > 0.0)) throw InputError("integration step must be positive");
    const double yaw_rate = -w;
    Pose out = pose;
    if (std::abs(w) < 1e-9) {
        out.x += v * dt * std::cos(pose.heading);
        out.y += v * dt * std::sin(pose.heading);
    } else {
        const double r = v / yaw_rate;
        const double h1 = pose.heading + yaw_rate * dt;
        out.x += r * (std::sin(h1) - std::sin(pose.heading));
        out.y -= r * (std::cos(h1) - std::cos(pose.heading));
        out.heading = h1;
    }
    out.heading = normalize_angle(out.heading);
    return out;
}

double segment_length(const Segment& seg) {
    return std::visit(Overloaded{[](const Straight& s) { return s.length; },
                                 [](const Arc& a) { return a.radius * std::abs(a.sweep); }},
                      seg);
}

Point segment_point(const Segment& seg, double s) {
    return std::visit(Overloaded{[s](const Straight& st) {
                                     return Point{st.start.x + s * std::cos(st.heading),
                                                  st.start.y + s * std::sin(st.heading)};
                                 },
                                 [s](const Arc& a) {
                                     const double ang =
                                         a.start_angle + std::copysign(s / a.radius, a.sweep);
                                     return Point{a.center.x + a.radius * std::cos(ang),
                                                  a.center.y + a.radius * std::sin(ang)};
                                 }},
                      seg);
}

double segment_heading(const Segment& seg, double s) {
    return std::visit(Overloaded{[](const Straight& st) { return normalize_angle(st.heading); },
                                 [s](const Arc& a) {
                                     const double ang = a.start_angle + std::copysign(s / a.radius, a.sweep);
                                     return normalize_angle(ang + std::copysign(kPi / 2.0, a.sweep));
                                 }},
                      seg);
}

double PathSpec::start_heading() const {
    if (!segments.empty()) return segment_heading(segments.front(), 0.0);
    if (waypoints.size() < 2) throw InputError("path needs at least 2 waypoints");
    return std::atan2(waypoints[1].y - waypoints[0].y, waypoints[1].x - waypoints[0].x);
}

Point PathSpec::point_at(double s) const {
    if (s <= 0.0) return waypoints.front();
    if (s >= length()) return waypoints.back();
    auto it = std::upper_bound(arc_length.begin(), arc_length.end(), s);
    const auto i = static_cast<std::size_t>(it - arc_length.begin());
    const double span = arc_length[i] - arc_length[i - 1];
    const double f = span > 0.0 ? (s - arc_length[i - 1]) / span : 0.0;
    return {waypoints[i - 1].x + f * (waypoints[i].x - waypoints[i - 1].x),
            waypoints[i - 1].y + f * (waypoints[i].y - waypoints[i - 1].y)};
}

PathSpec sample_path(std::vector<Segment> segments, double spacing) {
    if (segments.empty()) throw InputError("path has no segments");
    if (!(spacing > 0.0)) throw InputError("waypoint spacing must be positive");
    PathSpec path;
    path.segments = std::move(segments);
    path.waypoints.push_back(segment_point(path.segments.front(), 0.0));
    path.arc_length.push_back(0.0);
    double total = 0.0;
    for (const auto& seg : path.segments) {
        const double len = segment_length(seg);
        const auto pieces = std::max<long>(1, static_cast<long>(std::ceil(len / spacing)));
        for (long k = 1; k <= pieces; ++k) {
            const double s = len * static_cast<double>(k) / static_cast<double>(pieces);
            path.waypoints.push_back(segment_point(seg, s));
            path.arc_length.push_back(total + s);
        }
        total += len;
    }
    return path;
}

PathSpec build_figure8(double straight_len, double radius) {
    if (!(straight_len > 0.0) || !(radius > 0.0))
        throw InputError("figure-8 straight length and radius must be positive");
    const double a = 0.75 * straight_len;
    const double r = radius;
    std::vector<Segment> segs{
        Straight{{0.0, 0.0}, 0.0, a},
        Arc{{a, r}, r, -kPi / 2.0, kPi},
        Straight{{a, 2.0 * r}, kPi, 2.0 * a},
        Arc{{-a, 3.0 * r}, r, -kPi / 2.0, -kPi},
        Straight{{-a, 4.0 * r}, 0.0, a},
        Arc{{0.0, 3.0 * r}, r, kPi / 2.0, -kPi},
        Arc{{0.0, r}, r, kPi / 2.0, kPi},
    };
    auto path = sample_path(std::move(segs));
    // Close exactly; the last arc ends on the start point up to rounding.
    if (dist(path.waypoints.back(), path.waypoints.front()) > 1e-9)
        throw DomainError("figure-8 construction failed to close");
    path.waypoints.back() = path.waypoints.front();
    return path;
}

PathSpec build_circle(double radius, Point center) {
    if (!(radius > 0.0)) throw InputError("circle radius must be positive");
    auto path = sample_path({Arc{center, radius, -kPi / 2.0, 2.0 * kPi}});
    path.waypoints.back() = path.waypoints.front();
    return path;
}

ProgressTracker::ProgressTracker(const PathSpec& path, double look_back, double look_ahead) : path_(&path) {
    if (path.waypoints.size() < 2) throw InputError("path needs at least 2 waypoints");
    const double spacing = path.length() / static_cast<double>(path.waypoints.size() - 1);
    back_ = static_cast<std::size_t>(std::ceil(look_back / spacing));
    ahead_ = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(look_ahead / spacing)));
}

std::size_t ProgressTracker::update(const Point& p) {
    const auto& wp = path_->waypoints;
    const std::size_t last = wp.size() - 1;
    std::size_t lo = index_ > back_ ? index_ - back_ : 0;
    std::size_t best = index_;
    double best_d = std::numeric_limits<double>::infinity();
    for (;;) {
        const std::size_t hi = std::min(last, best + ahead_);
        for (std::size_t i = lo; i <= hi; ++i) {
            const double d = dist(wp[i], p);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        // Keep scanning while the best match sits on the window's leading edge.
        if (best < hi || hi == last) break;
        lo = hi + 1;
    }
    index_ = std::max(index_, best);
    return best;
}

double ProgressTracker::progress() const { return path_->arc_length[index_] / path_->length(); }

CrossError cross_error(const RunTrace& trace, const PathSpec& path) {
    if (path.waypoints.size() < 2) throw InputError("path needs at least 2 waypoints");
    ProgressTracker tracker(path);
    const auto& wp = path.waypoints;
    CrossError out;
    double sum = 0.0;
    for (const auto& s : trace.samples) {
        const Point c{s.pose.x, s.pose.y};
        const std::size_t j = tracker.update(c);
        std::size_t k;
        if (j == 0)
            k = 1;
        else if (j + 1 == wp.size())
            k = j - 1;
        else
            k = dist(wp[j - 1], c) <= dist(wp[j + 1], c) ? j - 1 : j + 1;
        // Line a x + b y + c = 0 through the two waypoints.
        const double a = wp[k].y - wp[j].y;
        const double b = wp[j].x - wp[k].x;
        const double norm = std::hypot(a, b);
        if (norm < 1e-12) {
            ++out.skipped;
            continue;
        }
        const double cc = -(a * wp[j].x + b * wp[j].y);
        const double e = std::abs(a * c.x + b * c.y + cc) / norm;
        out.per_sample.push_back(e);
        sum += e;
        ++out.used;
    }
    out.mean = out.used > 0 ? sum / static_cast<double>(out.used) : 0.0;
    return out;
}

double avg_accel(const RunTrace& trace) {
    const auto& s = trace.samples;
    if (s.size() < 2) throw InputError("average acceleration needs at least 2 samples");
    const double total = s.back().t - s.front().t;
    if (!(total > 0.0)) throw InputError("trace duration must be positive");
    double acc_v = 0.0;
    double acc_w = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double dt = s[i].t - s[i - 1].t;
        if (!(dt > 0.0)) throw InputError("trace time must be strictly increasing");
        acc_v += std::abs((s[i].v - s[i - 1].v) / dt);
        acc_w += std::abs((s[i].w - s[i - 1].w) / dt);
    }
    return (acc_v + acc_w) / (2.0 * total);
}

CompletionMonitor::CompletionMonitor(const PathSpec& path, CompletionOptions options)
    : path_(&path), options_(options), tracker_(path) {}

std::optional<double> CompletionMonitor::update(double t, const Point& p) {
    if (done_) return done_;
    tracker_.update(p);
    if (!t_leave_) {
        if (dist(p, path_->start()) > options_.disk_radius) t_leave_ = t;
        return std::nullopt;
    }
    if (tracker_.progress() >= options_.coverage && dist(p, path_->waypoints.back()) <= options_.disk_radius)
        done_ = t - *t_leave_;
    return done_;
}

std::optional<double> completion_time(const RunTrace& trace, const PathSpec& path,
                                      const CompletionOptions& options) {
    CompletionMonitor monitor(path, options);
    for (const auto& s : trace.samples)
        if (auto ct = monitor.update(s.t, {s.pose.x, s.pose.y})) return ct;
    return std::nullopt;
}

Metrics evaluate(const RunTrace& trace, const PathSpec& path, const CompletionOptions& options) {
    Metrics m;
    m.completion_time = completion_time(trace, path, options);
    m.avg_accel = trace.samples.size() >= 2 ? avg_accel(trace) : 0.0;
    m.cross_error = cross_error(trace, path).mean;
    return m;
}

} // namespace torso::vehicle
