#include "loraplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loraplan/errors.hpp"

namespace loraplan {

namespace {

std::string group_field(std::size_t g, const char* key) {
    return "groups[" + std::to_string(g) + "]." + key;
}

}  // namespace

void Scenario::validate() const {
    if (groups.empty()) throw ValidationError("groups", "at least one group is required");
    if (mcs_count < 1 || mcs_count > kMaxMcsCount)
        throw ValidationError("mcs_count", "must be in [1, 6]");
    if (static_cast<int>(mcs_table.size()) != mcs_count)
        throw ValidationError("mcs_count", "MCS table size does not match mcs_count");
    if (main_channels < 1) throw ValidationError("main_channels", "must be at least 1");
    if (retry_limit < 0) throw ValidationError("retry_limit", "must be non-negative");
    if (model.grid_points < 64) throw ValidationError("model.grid_points", "must be at least 64");
    phy.validate();
    path_loss.validate();
    timing.validate(mcs_count);

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& grp = groups[g];
        if (grp.n_motes < 0) throw ValidationError(group_field(g, "n_motes"), "must be non-negative");
        // zero is allowed for silent groups; capacity and allocation need a positive rate
        if (!(grp.rate_per_mote >= 0.0) || !std::isfinite(grp.rate_per_mote))
            throw ValidationError(group_field(g, "rate_per_mote"), "must be non-negative and finite");
        if (!(grp.plr_target > 0.0 && grp.plr_target < 1.0))
            throw ValidationError(group_field(g, "plr_target"), "must be in (0, 1)");
        if (grp.mcs_counts) {
            const auto& c = *grp.mcs_counts;
            if (static_cast<int>(c.size()) != mcs_count)
                throw ValidationError(group_field(g, "mcs_counts"), "needs one entry per MCS");
            std::int64_t sum = 0;
            for (auto v : c) {
                if (v < 0) throw ValidationError(group_field(g, "mcs_counts"), "entries must be non-negative");
                sum += v;
            }
            if (sum > grp.n_motes)
                throw ValidationError(group_field(g, "mcs_counts"), "assigns more motes than n_motes");
        }
    }
}

double Scenario::attempt_span(int mcs) const {
    return mcs_table[static_cast<std::size_t>(mcs)].t_data + timing.t2 + mcs_table.slowest().t_ack;
}

std::optional<CountMatrix> Scenario::fixed_assignment() const {
    CountMatrix counts = CountMatrix::Zero(mcs_count, static_cast<Eigen::Index>(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (!groups[g].mcs_counts) return std::nullopt;
        for (int i = 0; i < mcs_count; ++i)
            counts(i, static_cast<Eigen::Index>(g)) = (*groups[g].mcs_counts)[static_cast<std::size_t>(i)];
    }
    return counts;
}

LoadVector::LoadVector(CountMatrix counts, const std::vector<GroupSpec>& groups)
    : counts_(std::move(counts)) {
    if (counts_.cols() != static_cast<Eigen::Index>(groups.size()))
        throw std::invalid_argument("LoadVector: one column per group required");
    if ((counts_.array() < 0).any()) throw std::invalid_argument("LoadVector: negative mote count");
    Eigen::VectorXd rates(counts_.cols());
    for (Eigen::Index g = 0; g < counts_.cols(); ++g) {
        const auto& grp = groups[static_cast<std::size_t>(g)];
        if (counts_.col(g).sum() > grp.n_motes)
            throw std::invalid_argument("LoadVector: group " + std::to_string(g) +
                                        " has more assigned motes than n_motes");
        rates[g] = grp.rate_per_mote;
    }
    load_ = counts_.cast<double>() * rates;
}

LoadVector LoadVector::single(int mcs_count, int mcs, double load, double network_load) {
    if (mcs < 0 || mcs >= mcs_count) throw std::out_of_range("LoadVector::single: MCS index");
    if (!(load >= 0.0)) throw std::invalid_argument("LoadVector::single: negative load");
    if (!(network_load >= 0.0)) throw std::invalid_argument("LoadVector::single: negative network load");
    LoadVector v;
    v.counts_ = CountMatrix::Zero(mcs_count, 0);
    v.load_ = Eigen::VectorXd::Zero(mcs_count);
    v.load_[mcs] = load;
    v.background_ = std::max(0.0, network_load - load);
    return v;
}

double Scenario::network_load() const {
    double total = 0.0;
    for (const auto& g : groups) total += static_cast<double>(g.n_motes) * g.rate_per_mote;
    return total;
}

}  // namespace loraplan
