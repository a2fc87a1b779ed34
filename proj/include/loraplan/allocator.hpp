#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>

#include "loraplan/capacity.hpp"
#include "loraplan/scenario.hpp"

namespace loraplan {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a decimal literal such as "0.0007" or "2.5e-4".
Rational parse_decimal(std::string_view text);

/// Exact value of the shortest decimal that round-trips to `value`, so that
/// 0.0007 becomes 7/10000 rather than its binary approximation.
Rational decimal_rational(double value);

struct AllocationFailure {
    int first_unplaceable_group = -1;
    /// (group, motes left without an MCS) for every group that came up short.
    std::vector<std::pair<int, std::int64_t>> unplaced;
    /// Per-MCS headroom min_h nu^h_m - l_m at the moment of failure.
    Eigen::VectorXd residual_capacity;
};

struct Allocation {
    CountMatrix counts;                 // (mcs, group)
    std::vector<Rational> exact_loads;  // l_i
    std::optional<AllocationFailure> failure;

    bool success() const { return !failure.has_value(); }
    Eigen::VectorXd loads() const;
};

/// Greedy MCS allocation. Groups are taken strictest PLR target first (ties by
/// index); a cursor walks MCS 0..M-1 and never moves back. On MCS m a group g
/// may add floor((min(nu^g_m, nu^h_m for h already on m) - l_m) / lambda_g)
/// motes. Running out of MCSs is reported as a failure value.
Allocation allocate(const std::vector<GroupSpec>& groups, const Eigen::MatrixXd& nu);

Allocation allocate(const Scenario& scenario, const CapacityTable& capacities);

struct ComplianceReport {
    Eigen::MatrixXd max_plr;          // (mcs, group), 0 where the group is absent
    Eigen::VectorXd per_mcs_max_plr;  // worst over groups present on the MCS
    Eigen::VectorXd per_group_worst;
    std::vector<bool> compliant;      // per group
    bool all_compliant = true;
};

ComplianceReport verify_allocation(const CountMatrix& counts, const Scenario& scenario);

inline ComplianceReport verify_allocation(const Allocation& allocation, const Scenario& scenario) {
    return verify_allocation(allocation.counts, scenario);
}

}  // namespace loraplan
