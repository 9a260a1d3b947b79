#pragma once

#include <stdexcept>
#include <string>

namespace torso {

// Bad argument at call time (out-of-range sample, empty trace, dt <= 0).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inconsistent parameters or calibration (non-increasing boundaries, bad thresholds).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Calibration could not produce a profile (missing posture, short dwell).
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Geometry outside the triangle the support mechanism can form.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Pendulum left the upright half-plane; the coupling model is invalid past this point.
class PendulumFell : public std::runtime_error {
public:
    PendulumFell(double t, double theta)
        : std::runtime_error("pendulum fell at t=" + std::to_string(t) +
                             " s (theta=" + std::to_string(theta) + " rad)"),
          t_(t), theta_(theta) {}

    double time() const { return t_; }
    double theta() const { return theta_; }

private:
    double t_;
    double theta_;
};

} // namespace torso
