#pragma once

// Batch workloads with an OpenMP path and a serial reference. Both produce
// identical results element by element; the serial forms exist for testing.

#include <vector>

#include "torso/harness.hpp"
#include "torso/vehicle.hpp"

namespace torso::kernels {

std::vector<harness::VelocityPoint> velocity_space_serial(const CalibrationProfile& profile,
                                                          const MappingParams& params, int cop_steps,
                                                          int bend_steps);
std::vector<harness::VelocityPoint> velocity_space_parallel(const CalibrationProfile& profile,
                                                            const MappingParams& params, int cop_steps,
                                                            int bend_steps);

std::vector<harness::StiffnessRow> stiffness_serial(const std::vector<double>& kappas,
                                                    const harness::StiffnessStudyConfig& config);
std::vector<harness::StiffnessRow> stiffness_parallel(const std::vector<double>& kappas,
                                                      const harness::StiffnessStudyConfig& config);

std::vector<vehicle::Metrics> evaluate_serial(const std::vector<vehicle::RunTrace>& traces,
                                              const vehicle::PathSpec& path);
std::vector<vehicle::Metrics> evaluate_parallel(const std::vector<vehicle::RunTrace>& traces,
                                                const vehicle::PathSpec& path);

// Threads the parallel kernels will use.
int max_threads();

} // namespace torso::kernels
