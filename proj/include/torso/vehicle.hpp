#pragma once

// Kinematic differential-drive base, figure-8 course and path-following metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace torso::vehicle {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0; // rad, (-pi, pi], counter-clockwise from +x

    bool operator==(const Pose&) const = default;
};

double normalize_angle(double a);

// Exact constant-twist update. Positive w yaws clockwise (heading decreases),
// matching the command convention of the mapping stage.
Pose integrate_unicycle(const Pose& pose, double v, double w, double dt);

struct Straight {
    Point start;
    double heading = 0.0;
    double length = 0.0;
};

struct Arc {
    Point center;
    double radius = 0.0;
    double start_angle = 0.0; // polar angle of the start point around the center
    double sweep = 0.0;       // signed, + counter-clockwise
};

using Segment = std::variant<Straight, Arc>;

double segment_length(const Segment& seg);
Point segment_point(const Segment& seg, double s); // s in [0, length]
double segment_heading(const Segment& seg, double s);

struct PathSpec {
    std::vector<Segment> segments;
    std::vector<Point> waypoints;
    std::vector<double> arc_length; // cumulative, same size as waypoints

    double length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
    Point start() const { return waypoints.front(); }
    double start_heading() const;
    // Point at arc length s, clamped to the path ends.
    Point point_at(double s) const;
};

inline constexpr double kMaxWaypointSpacing = 0.01;

PathSpec sample_path(std::vector<Segment> segments, double spacing = kMaxWaypointSpacing);

// Closed figure-8 of three straights and four half-circles. The two outer
// straights are 0.75 * straight_len and the middle one 1.5 * straight_len,
// so the total length is 3 * straight_len + 4 * pi * radius.
PathSpec build_figure8(double straight_len = 4.0, double radius = 1.0);

PathSpec build_circle(double radius, Point center = {0.0, 0.0});

struct TraceSample {
    double t = 0.0;
    Pose pose;
    double v = 0.0;
    double w = 0.0;
};

struct RunTrace {
    std::vector<TraceSample> samples;
    std::string scenario;
    std::string interface_id = "torso";
    std::uint64_t params_hash = 0;
};

// Tracks the nearest waypoint with a window that only moves forward, so a
// figure-8 crossing cannot pull the match onto the other lobe.
class ProgressTracker {
public:
    explicit ProgressTracker(const PathSpec& path, double look_back = 0.25, double look_ahead = 1.0);

    std::size_t update(const Point& p);
    std::size_t index() const { return index_; }
    double progress() const;

private:
    const PathSpec* path_;
    std::size_t index_ = 0;
    std::size_t back_;
    std::size_t ahead_;
};

struct CrossError {
    double mean = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0; // degenerate chords
    std::vector<double> per_sample;
};

// Distance to the line through the two nearest waypoints, averaged over samples.
CrossError cross_error(const RunTrace& trace, const PathSpec& path);

// Mean absolute finite-difference acceleration, (sum |dv/dt| + sum |dw/dt|) / (2 T).
double avg_accel(const RunTrace& trace);

struct CompletionOptions {
    double disk_radius = 0.2;
    double coverage = 0.95;
};

// Incremental form of the completion rule, for loops that stop on completion.
class CompletionMonitor {
public:
    CompletionMonitor(const PathSpec& path, CompletionOptions options = {});

    // Returns the completion time once the finish disk is reached.
    std::optional<double> update(double t, const Point& p);
    bool left_start() const { return t_leave_.has_value(); }
    double coverage() const { return tracker_.progress(); }

private:
    const PathSpec* path_;
    CompletionOptions options_;
    ProgressTracker tracker_;
    std::optional<double> t_leave_;
    std::optional<double> done_;
};

// Time from leaving the start disk to reaching the finish disk after covering
// the required share of the path; nullopt if the course was not completed.
std::optional<double> completion_time(const RunTrace& trace, const PathSpec& path,
                                      const CompletionOptions& options = {});

struct Metrics {
    std::optional<double> completion_time;
    double avg_accel = 0.0;
    double cross_error = 0.0;
};

Metrics evaluate(const RunTrace& trace, const PathSpec& path, const CompletionOptions& options = {});

} // namespace torso::vehicle
