#pragma once

// Sagittal-plane human/device coupling: the upper body as an inverted pendulum
// on the device cart, tied to the support bar by a spring-damper.
//
// The state is expressed in the pendulum frame, where the torso mass sits at
// x - l sin(theta). A positive lean therefore points toward -x, and the device
// drives along the lean: its forward speed is -x_dot and the drive force enters
// the plant as -u.

#include <utility>
#include <vector>

namespace torso::coupling {

struct Params {
    double m = 32.7;      // upper-body mass, kg
    double M = 75.0;      // device + lower body, kg
    double l = 0.25;      // pendulum length, m
    double g = 10.0;      // m/s^2
    double h_max = 33.65; // largest human force, N
    double kappa = 2000.0; // spring, N/m
    double k_c = 30.0;    // damper, N s/m
    double k_d = 1.0;     // cart friction
    double k_2 = 0.02;    // contact force -> reference speed
    double k_3 = 100.0;   // speed error -> drive force

    void validate() const;
};

struct State {
    double x = 0.0;
    double x_dot = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;
    double t = 0.0;

    double forward_velocity() const { return -x_dot; }
    bool operator==(const State&) const = default;
};

struct Accel {
    double x_dd = 0.0;
    double theta_dd = 0.0;
};

struct ControlOutput {
    double v_ref = 0.0;
    double u = 0.0;
};

// How the drive force is produced during integration.
enum class Drive {
    Held,       // controller sampled once per step (zero-order hold)
    Continuous, // controller evaluated inside every RK4 stage
    Off,        // u = 0, device brakes released
};

// Cart-pendulum equations of motion, with u the drive force along +x.
// Throws PendulumFell when |theta| >= pi/2.
Accel derivatives(const State& s, double h, double u, const Params& p);

// Unilateral contact force on the support pad (never negative).
double contact_force(const State& s, const Params& p);

ControlOutput controllers(double contact, double x_dot, const Params& p);

struct StepResult {
    State next;
    double contact = 0.0; // at step start
    double v_ref = 0.0;
    double u = 0.0;
    double theta_dd = 0.0; // derivative evaluation at step start
};

// One RK4 step. dt must lie in (0, 0.01].
StepResult step(const State& s, double h, const Params& p, double dt, Drive drive = Drive::Held);

struct ForceStage {
    double force = 0.0;    // N
    double duration = 0.0; // s
};

struct ForceProfile {
    std::vector<ForceStage> stages;

    double total_duration() const;
    double force_at(double t) const;
    void validate(const Params& p) const;

    // Six levels 0, h/5, ..., h up and back down without repeating the peak:
    // 11 stages of `dwell` seconds.
    static ForceProfile staircase(double h_max, double dwell = 10.0, int levels = 6);
    static ForceProfile constant(double force, double duration);
};

struct Sample {
    double t = 0.0;
    State state;
    double contact = 0.0;
    double v_ref = 0.0;
    double u = 0.0;
    double h = 0.0;
    double theta_dd = 0.0;
};

struct SimulationOptions {
    double dt = 1e-3;
    Drive drive = Drive::Held;
    State initial{};
};

// Fixed-step run over the whole profile. One sample per step, taken at the step start,
// plus the terminal state. Throws PendulumFell.
std::vector<Sample> simulate(const ForceProfile& profile, const Params& p,
                             const SimulationOptions& options = {});

// Mean |theta_dd| over the samples that carry a derivative evaluation.
double average_angular_accel(const std::vector<Sample>& trace);

// Smallest stiffness whose restoring torque balances gravity near upright.
double min_stiffness(const Params& p);

// Total mechanical energy of the conservative part of the model.
double mechanical_energy(const State& s, const Params& p);

struct StepResponse {
    double rise_time = 0.0; // 10% -> 90% of the settled forward speed, s
    double overshoot = 0.0; // peak above settled value, fraction
};

// Forward-speed response over [t_begin, t_end) of a trace.
StepResponse step_response(const std::vector<Sample>& trace, double t_begin, double t_end);

struct SupportGeometry {
    double r1 = 0.35;                    // upper bar, m
    double r2 = 0.25;                    // lower bar, m
    double alpha_rest = 150.0 * 3.14159265358979323846 / 180.0; // rad

    void validate() const;
};

struct SupportPose {
    double r3 = 0.0;    // hip joint to contact point, m
    double theta = 0.0; // torso angle about the hip, rad
};

SupportPose support_kinematics(double theta_b, const SupportGeometry& geom);

inline constexpr double kUpperBodyFraction = 0.545;
inline double upper_body_mass(double body_mass) { return kUpperBodyFraction * body_mass; }

struct SupportForcePoint {
    double theta_b = 0.0; // rad
    double theta = 0.0;   // rad
    double force = 0.0;   // N
};

// Force needed to hold the upper body, m g sin(theta), sampled over theta_b.
std::vector<SupportForcePoint> support_force_curve(double theta_b_min, double theta_b_max, int samples,
                                                   double upper_mass, const SupportGeometry& geom,
                                                   double g = 10.0);

} // namespace torso::coupling
