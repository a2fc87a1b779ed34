#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loraplan/geometry.hpp"
#include "loraplan/phy_timing.hpp"

namespace loraplan {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct GroupSpec {
    std::string name;
    std::int64_t n_motes = 0;
    double rate_per_mote = 0.0;  // frames per second
    double plr_target = 0.0;
    /// Optional fixed MCS assignment: n_motes per MCS index (size M).
    std::optional<std::vector<std::int64_t>> mcs_counts;

    bool operator==(const GroupSpec&) const = default;
};

/// Knobs of the analytic model that are not part of the network itself.
struct ModelOptions {
    int grid_points = 512;
    bool ideal_ack = false;      // force P^Ack = 1 (unacknowledged mode)
    bool frame_discard = true;   // false forces P^G = 1

    bool operator==(const ModelOptions&) const = default;
};

struct Scenario {
    std::vector<GroupSpec> groups;
    PhyConfig phy;
    McsTable mcs_table;
    PathLossParams<double> path_loss;
    RadioTiming timing;
    int main_channels = 1;  // F
    int retry_limit = 7;    // RL
    int mcs_count = 6;      // M
    ModelOptions model;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;

    /// Data-frame span plus both receive windows: the interval during which a
    /// newly generated frame supersedes the one in flight.
    double attempt_span(int mcs) const;

    /// Total offered load of every mote in every group, frames/s.
    double network_load() const;

    /// Allocation implied by the groups' `mcs_counts`, or nullopt if any group
    /// lacks one.
    std::optional<CountMatrix> fixed_assignment() const;

    bool operator==(const Scenario&) const = default;
};

/// Per-MCS, per-group mote counts a_{i,g} and the resulting per-MCS loads
/// l_i = sum_g a_{i,g} lambda_g.
class LoadVector {
public:
    LoadVector() = default;
    LoadVector(CountMatrix counts, const std::vector<GroupSpec>& groups);

    /// MCS `mcs` carries an arbitrary (possibly fractional) load `load`; the
    /// rest of a network of total load `network_load` sits on MCSs not yet
    /// known. Used by capacity searches.
    static LoadVector single(int mcs_count, int mcs, double load, double network_load = 0.0);

    const CountMatrix& counts() const { return counts_; }
    const Eigen::VectorXd& per_mcs_load() const { return load_; }
    double load(int mcs) const { return load_[mcs]; }
    double total_load() const { return load_.sum() + background_; }
    /// Load whose MCS is unknown. It only shows up on the service channel.
    double background_load() const { return background_; }
    int mcs_count() const { return static_cast<int>(load_.size()); }

private:
    CountMatrix counts_;
    Eigen::VectorXd load_;
    double background_ = 0.0;
};

}  // namespace loraplan
