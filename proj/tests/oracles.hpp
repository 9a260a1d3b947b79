#pragma once

// Reference implementations written independently of the library code. They
// favour directness over speed and share no helpers with src/.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "torso/coupling.hpp"
#include "torso/vehicle.hpp"

namespace oracle {

// Equations of motion assembled from the Lagrangian of a cart (mass M) with a
// point mass m at (x - l sin th, l cos th), spring potential 0.5 kappa (l sin th)^2,
// generalized forces Q_x = u - k_d x_dot and Q_th = h l - k_c l^2 cos th th_dot.
inline Eigen::Vector2d lagrange_accel(double x_dot, double th, double th_dot, double h, double u,
                                      const torso::coupling::Params& p) {
    const double s = std::sin(th);
    const double c = std::cos(th);
    Eigen::Matrix2d mass;
    mass << p.M + p.m, -p.m * p.l * c, -p.m * p.l * c, p.m * p.l * p.l;
    const double q_x = u - p.k_d * x_dot;
    const double q_th = h * p.l - p.k_c * p.l * p.l * c * th_dot;
    Eigen::Vector2d rhs;
    rhs << q_x - p.m * p.l * s * th_dot * th_dot,
        q_th + p.m * p.g * p.l * s - p.kappa * p.l * p.l * s * c;
    return mass.fullPivLu().solve(rhs);
}

// Forward magnitude curve evaluated straight from the vertex form.
inline double magnitude_hand(double theta, double ft, double fm, double rho) {
    const double pm = (fm - ft) / rho;
    const double vertex = ft + pm;
    const double amp = 1.0 / (rho * (2.0 - rho));
    return amp * (1.0 - std::pow((theta - vertex) / pm, 2));
}

inline double cop_brute(const std::vector<double>& lambda, const std::vector<double>& s) {
    long double num = 0.0L;
    long double den = 0.0L;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += static_cast<long double>(lambda[i]) * s[i];
        den += lambda[i];
    }
    return static_cast<double>(num / den);
}

inline double point_segment_distance(const torso::vehicle::Point& p, const torso::vehicle::Point& a,
                                     const torso::vehicle::Point& b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::fmax(0.0, std::fmin(1.0, t));
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

// Distance to the nearest polyline segment over the whole path.
inline double nearest_segment_distance(const torso::vehicle::Point& p, const torso::vehicle::PathSpec& path) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        best = std::fmin(best, point_segment_distance(p, path.waypoints[i - 1], path.waypoints[i]));
    return best;
}

// Static support check with the drive released: does a small lean grow?
inline bool lean_diverges(double kappa, torso::coupling::Params p, double theta0 = 0.01, double horizon = 60.0) {
    p.kappa = kappa;
    torso::coupling::State s;
    s.theta = theta0;
    const double dt = 2e-3;
    const auto steps = static_cast<long>(horizon / dt);
    try {
        for (long i = 0; i < steps; ++i) {
            s = torso::coupling::step(s, 0.0, p, dt, torso::coupling::Drive::Off).next;
            if (std::abs(s.theta) > 3.0 * theta0) return true;
        }
    } catch (const std::exception&) {
        return true;
    }
    return false;
}

inline double bisect_min_stiffness(const torso::coupling::Params& p, double lo, double hi, double rel_tol) {
    while ((hi - lo) > rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        if (lean_diverges(mid, p))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracle
