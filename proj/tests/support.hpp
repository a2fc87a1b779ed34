#pragma once

// Shared fixtures and randomized property suites. The unit tests and the
// acceptance binary run the same suites.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "loraplan/geometry.hpp"
#include "loraplan/scenario.hpp"

namespace loraplan::testing {

std::filesystem::path source_dir();
std::filesystem::path scenario_path(const std::string& name);
Scenario load_named(const std::string& name);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Runs a shell command, returns its exit status. Output goes to `log` if given.
int run_command(const std::string& command, const std::filesystem::path& log = {});
std::string read_text(const std::filesystem::path& path);

/// Geometric Monte-Carlo estimate of the capture kernels: one interferer
/// drawn uniformly in the disc, outcomes decided from received powers.
struct KernelEstimate {
    double v_gw = 0.0;
    double v_both = 0.0;
    double v_one = 0.0;
    double ack = 0.0;
    std::int64_t samples = 0;

    /// Standard error of a proportion p estimated from `samples` draws.
    double se(double p) const;
};

KernelEstimate monte_carlo_kernels(double x, const PathLossParams<double>& params,
                                   std::int64_t samples, std::uint64_t seed);

struct PropertyReport {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    bool ok() const { return failures == 0 && cases > 0; }
    void fail(const std::string& what) {
        if (failures++ == 0) first_failure = what;
    }
};

/// generated == delivered + discarded + dropped for every mote, PLR in [0, 1],
/// and same-seed reruns identical.
PropertyReport sim_accounting_suite(int cases, std::uint64_t seed);

/// Conservation, exact feasibility, determinism and capacity monotonicity of
/// the greedy allocator on random groups and capacity matrices.
PropertyReport allocator_suite(int cases, std::uint64_t seed);

/// Fixed-point iteration against bisection, |difference| <= 1e-10.
PropertyReport fixed_point_suite(int cases, std::uint64_t seed);

/// CDF of random piecewise-linear profiles: non-decreasing, 0 below the
/// minimum, 1 just above the maximum, percentile consistent with the CDF.
PropertyReport cdf_suite(int cases, std::uint64_t seed);

}  // namespace loraplan::testing
