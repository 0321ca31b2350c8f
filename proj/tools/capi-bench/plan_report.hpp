#pragma once

#include <capi/mdp_io.hpp>
#include <capi/planner.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace capi_bench {

struct PlanReport {
  nlohmann::json record;  ///< deterministic for a given (instance, seed, config)
  double wall_time_ms = 0.0;
  capi::RecursivePolicy policy;
};

/// Runs the planner once and scores the result with the exact oracle.
PlanReport run_plan(const capi::MdpInstance& instance, const std::string& instance_name,
                    std::uint64_t seed, const capi::PlannerConfig& config);

/// Realizability error recorded in the instance metadata, 0 when absent.
double instance_epsilon(const capi::MdpInstance& instance);

/// Worker cap from CAPI_PLANNER_THREADS (unset or invalid: no cap).
std::size_t thread_cap(std::size_t wanted);

}  // namespace capi_bench
