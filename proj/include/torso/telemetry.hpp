#pragma once

// Live drive session and its wire protocol ("torso-drive.v1"). Transport lives
// in server.hpp; everything here is single-threaded except BoundedQueue.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "torso/harness.hpp"
#include "torso/mapping.hpp"
#include "torso/vehicle.hpp"

namespace torso::telemetry {

inline constexpr const char* kSubprotocol = "torso-drive.v1";
inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kQueueCap = 256;
inline constexpr double kTickHz = 50.0;
inline constexpr double kTelemetryHz = 30.0;

enum class Mode { Idle, Running, SafetyStopped };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct SessionState {
    double t = 0.0;
    Mode mode = Mode::Idle;
    vehicle::Pose pose;
    VelocityCommand cmd;
    std::optional<double> cop;
    double p = 0.0;
    double theta_b = 0.0; // offset-corrected, degrees
    std::optional<PostureCategory> category;
    std::vector<double> fsr; // effective conductances, sensor order
    double path_progress = 0.0;

    bool operator==(const SessionState&) const = default;
};

std::string telemetry_encode(const SessionState& s);
SessionState telemetry_decode(const std::string& msg);

struct SetPosture {
    std::optional<std::vector<double>> lambda; // raw effective pressure pattern
    std::optional<harness::Intent> intent;
};
struct SetBendAngle {
    double deg = 0.0;
};
struct Start {};
struct Stop {};
struct Reset {};
struct SetParams {
    nlohmann::json mapping; // partial overrides
};

using ClientCommand = std::variant<SetPosture, SetBendAngle, Start, Stop, Reset, SetParams>;

// Throws InputError on malformed or unsupported messages.
ClientCommand parse_command(const std::string& msg);
std::string encode_command(const ClientCommand& cmd);
std::string error_frame(const std::string& message);

// Single rider on the figure-8 course. Owned by one thread.
class LiveSession {
public:
    explicit LiveSession(MappingParams params = {}, harness::SyntheticUser user = {},
                         double straight_len = 4.0, double radius = 1.0);

    // Validates and applies a command. Throws InputError/ConfigError and leaves
    // the session unchanged on rejection.
    void apply(const ClientCommand& cmd);
    void tick(double dt = 1.0 / kTickHz);

    const SessionState& state() const { return state_; }
    const MappingParams& params() const { return pipeline_.params(); }
    const vehicle::PathSpec& path() const { return path_; }
    const vehicle::RunTrace& trace() const { return trace_; }

private:
    SensorFrame current_frame() const;
    void reset();

    harness::SyntheticUser user_;
    vehicle::PathSpec path_;
    PipelineSession pipeline_;
    vehicle::ProgressTracker tracker_;
    SessionState state_;
    SetPosture posture_;
    std::optional<double> bend_deg_;
    vehicle::RunTrace trace_;
};

// Passes at most `max_hz` events per second of session time.
class RateLimiter {
public:
    explicit RateLimiter(double max_hz = kTelemetryHz) : period_(1.0 / max_hz) {}
    bool allow(double t);
    void reset() { last_.reset(); }

private:
    double period_;
    std::optional<double> last_;
};

enum class Overflow { DropNewest, DropOldest };

// Mutex-guarded FIFO with a hard cap; overflowing pushes drop a message instead of blocking.
template <class T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t cap = kQueueCap, Overflow policy = Overflow::DropNewest)
        : cap_(cap), policy_(policy) {}

    // Returns false when a message was dropped.
    bool push(T v) {
        {
            std::lock_guard lock(m_);
            if (q_.size() >= cap_) {
                ++dropped_;
                if (policy_ == Overflow::DropNewest) return false;
                q_.pop_front();
                q_.push_back(std::move(v));
                cv_.notify_one();
                return false;
            }
            q_.push_back(std::move(v));
        }
        cv_.notify_one();
        return true;
    }

    std::optional<T> try_pop() {
        std::lock_guard lock(m_);
        if (q_.empty()) return std::nullopt;
        T v = std::move(q_.front());
        q_.pop_front();
        return v;
    }

    template <class Rep, class Period>
    std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock lock(m_);
        if (!cv_.wait_for(lock, timeout, [&] { return !q_.empty(); })) return std::nullopt;
        T v = std::move(q_.front());
        q_.pop_front();
        return v;
    }

    std::size_t size() const {
        std::lock_guard lock(m_);
        return q_.size();
    }
    std::size_t dropped() const {
        std::lock_guard lock(m_);
        return dropped_;
    }
    std::size_t capacity() const { return cap_; }

private:
    mutable std::mutex m_;
    std::condition_variable cv_;
    std::deque<T> q_;
    std::size_t cap_;
    Overflow policy_;
    std::size_t dropped_ = 0;
};

} // namespace torso::telemetry
