#pragma once

#include <string>

#include <Eigen/Dense>

#include "loraplan/analytic_model.hpp"
#include "loraplan/scenario.hpp"

namespace loraplan {

/// Which PLR statistic of the distribution must stay under the target.
struct Criterion {
    enum class Kind { max, average, percentile };
    Kind kind = Kind::max;
    double p = 1.0;  // for percentile

    static Criterion max() { return {Kind::max, 1.0}; }
    static Criterion average() { return {Kind::average, 1.0}; }
    static Criterion percentile(double p);

    /// "max", "average" or "percentile=<p>".
    static Criterion parse(const std::string& text);
    std::string to_string() const;

    double evaluate(const PlrProfile& profile) const;

    bool operator==(const Criterion&) const = default;
};

struct CapacityResult {
    double load = 0.0;      // nu, frames/s
    bool monotone = true;   // false if the lattice scan saw the statistic decrease
    bool bounded = true;    // false if the target was never exceeded up to the search cap
};

/// nu^g_i: the largest load on MCS `mcs`, generated only by motes of `group`,
/// whose PLR statistic stays at or below the group's target.
CapacityResult capacity(int mcs, const GroupSpec& group, const Scenario& scenario,
                        const Criterion& criterion, const KernelGrid& kernels);

CapacityResult capacity(int mcs, const GroupSpec& group, const Scenario& scenario,
                        const Criterion& criterion);

/// The PLR statistic for `group` when MCS `mcs` carries total load `load`.
double statistic_at_load(int mcs, const GroupSpec& group, const Scenario& scenario,
                         const Criterion& criterion, const KernelGrid& kernels, double load);

/// nu indexed (mcs, group).
struct CapacityTable {
    Eigen::MatrixXd nu;
    Criterion criterion;

    int mcs_count() const { return static_cast<int>(nu.rows()); }
    int group_count() const { return static_cast<int>(nu.cols()); }
};

CapacityTable capacity_table(const Scenario& scenario, const Criterion& criterion);

}  // namespace loraplan
