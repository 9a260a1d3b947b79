#include "torso/kernels.hpp"

#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "torso/error.hpp"

namespace torso::kernels {

namespace {

// Runs body(i) for i in [0, n) across threads, rethrowing the first failure.
template <class F>
void parallel_for(long n, F&& body) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace

std::vector<harness::VelocityPoint> velocity_space_serial(const CalibrationProfile& profile,
                                                          const MappingParams& params, int cop_steps,
                                                          int bend_steps) {
    return harness::velocity_space_sweep(profile, params, cop_steps, bend_steps);
}

std::vector<harness::VelocityPoint> velocity_space_parallel(const CalibrationProfile& profile,
                                                            const MappingParams& params, int cop_steps,
                                                            int bend_steps) {
    if (cop_steps < 10 || bend_steps < 10) throw InputError("sweep resolution must be at least 10x10");
    profile.validate();
    params.validate();
    const double s_lo = profile.layout.s.front();
    const double s_hi = profile.layout.s.back();
    auto cop_at = [&](int i) { return s_lo + (s_hi - s_lo) * i / (cop_steps - 1); };

    std::vector<double> theta_fm(static_cast<std::size_t>(cop_steps));
    for (int i = 0; i < cop_steps; ++i) theta_fm[static_cast<std::size_t>(i)] = forward_max_angle(cop_at(i), profile, params);
    double theta_hi = params.theta_bm;
    for (double t : theta_fm) theta_hi = std::max(theta_hi, t);

    std::vector<harness::VelocityPoint> out(static_cast<std::size_t>(cop_steps) * static_cast<std::size_t>(bend_steps));
    parallel_for(cop_steps, [&](long i) {
        const double cop = cop_at(static_cast<int>(i));
        for (int j = 0; j < bend_steps; ++j) {
            const double theta = params.theta_bm + (theta_hi - params.theta_bm) * j / (bend_steps - 1);
            const auto mag = magnitude(theta, theta_fm[static_cast<std::size_t>(i)], params);
            const auto cmd = command(mag, cop, profile.beta, params);
            out[static_cast<std::size_t>(i) * static_cast<std::size_t>(bend_steps) + static_cast<std::size_t>(j)] =
                {cmd.v / params.v_max, cmd.w / params.w_max, mag.context};
        }
    });
    return out;
}

std::vector<harness::StiffnessRow> stiffness_serial(const std::vector<double>& kappas,
                                                    const harness::StiffnessStudyConfig& config) {
    return harness::stiffness_study(kappas, config);
}

std::vector<harness::StiffnessRow> stiffness_parallel(const std::vector<double>& kappas,
                                                      const harness::StiffnessStudyConfig& config) {
    std::vector<harness::StiffnessRow> out(kappas.size());
    parallel_for(static_cast<long>(kappas.size()), [&](long i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = harness::stiffness_run(kappas[k], config);
    });
    return out;
}

std::vector<vehicle::Metrics> evaluate_serial(const std::vector<vehicle::RunTrace>& traces,
                                              const vehicle::PathSpec& path) {
    std::vector<vehicle::Metrics> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(vehicle::evaluate(t, path));
    return out;
}

std::vector<vehicle::Metrics> evaluate_parallel(const std::vector<vehicle::RunTrace>& traces,
                                                const vehicle::PathSpec& path) {
    std::vector<vehicle::Metrics> out(traces.size());
    parallel_for(static_cast<long>(traces.size()), [&](long i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = vehicle::evaluate(traces[k], path);
    });
    return out;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace torso::kernels
