#include "loraplan/capacity.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "loraplan/errors.hpp"

namespace loraplan {

namespace {

// Loads above this are far past saturation for any LoRa MCS.
constexpr double kMaxSearchLoad = 1e4;

}  // namespace

Criterion Criterion::percentile(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile must be in (0, 1]");
    return {Kind::percentile, p};
}

Criterion Criterion::parse(const std::string& text) {
    if (text == "max") return max();
    if (text == "average" || text == "avg") return average();
    const std::string prefix = "percentile=";
    if (text.rfind(prefix, 0) == 0) {
        const std::string value = text.substr(prefix.size());
        double p = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), p);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw std::invalid_argument("criterion: cannot parse percentile '" + value + "'");
        if (p > 1.0 && p <= 100.0) p /= 100.0;  // accept percent
        return percentile(p);
    }
    throw std::invalid_argument("criterion must be max, average or percentile=<p>, got '" + text + "'");
}

std::string Criterion::to_string() const {
    switch (kind) {
        case Kind::max: return "max";
        case Kind::average: return "average";
        case Kind::percentile: {
            std::ostringstream os;
            os << "percentile=" << p;
            return os.str();
        }
    }
    return "max";
}

double Criterion::evaluate(const PlrProfile& profile) const {
    switch (kind) {
        case Kind::max: return profile.max_plr();
        case Kind::average: return profile.average_plr();
        case Kind::percentile: return profile.percentile(p);
    }
    return profile.max_plr();
}

double statistic_at_load(int mcs, const GroupSpec& group, const Scenario& scenario,
                         const Criterion& criterion, const KernelGrid& kernels, double load) {
    const auto loads = LoadVector::single(scenario.mcs_count, mcs, load, scenario.network_load());
    return criterion.evaluate(plr_profile(mcs, group, loads, scenario, kernels));
}

CapacityResult capacity(int mcs, const GroupSpec& group, const Scenario& scenario,
                        const Criterion& criterion, const KernelGrid& kernels) {
    const double lambda = group.rate_per_mote;
    const double target = group.plr_target;
    if (!(lambda > 0.0))
        throw ValidationError("rate_per_mote", "capacity of group '" + group.name + "' needs a positive rate");
    auto stat = [&](double load) {
        return statistic_at_load(mcs, group, scenario, criterion, kernels, load);
    };

    CapacityResult result;
    if (stat(lambda) > target) {
        result.load = 0.0;
        return result;
    }

    // Lattice of whole motes: bracket by doubling, then binary search.
    std::int64_t lo = 1;
    std::int64_t hi = 2;
    double prev = stat(lambda);
    while (true) {
        const double load = static_cast<double>(hi) * lambda;
        if (load > kMaxSearchLoad) {
            result.load = kMaxSearchLoad;
            result.bounded = false;
            return result;
        }
        const double s = stat(load);
        if (s < prev) result.monotone = false;
        prev = s;
        if (s > target) break;
        lo = hi;
        hi *= 2;
    }

    if (result.monotone) {
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (stat(static_cast<double>(mid) * lambda) <= target)
                lo = mid;
            else
                hi = mid;
        }
    } else {
        // bisection is unsafe; take the first violation in a linear scan
        std::int64_t n = 1;
        while (n + 1 < hi && stat(static_cast<double>(n + 1) * lambda) <= target) ++n;
        lo = n;
        hi = n + 1;
    }

    // Continuous refinement inside the lattice cell [lo, lo + 1) * lambda.
    double a = static_cast<double>(lo) * lambda;
    double b = static_cast<double>(hi) * lambda;
    for (int i = 0; i < 200 && b - a > 1e-13 * b; ++i) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (stat(mid) <= target)
            a = mid;
        else
            b = mid;
    }
    result.load = a;
    return result;
}

CapacityResult capacity(int mcs, const GroupSpec& group, const Scenario& scenario,
                        const Criterion& criterion) {
    const auto kernels = make_kernel_grid(scenario.path_loss, scenario.model.grid_points);
    return capacity(mcs, group, scenario, criterion, kernels);
}

CapacityTable capacity_table(const Scenario& scenario, const Criterion& criterion) {
    const auto kernels = make_kernel_grid(scenario.path_loss, scenario.model.grid_points);
    CapacityTable table;
    table.criterion = criterion;
    table.nu.resize(scenario.mcs_count, static_cast<Eigen::Index>(scenario.groups.size()));
    for (int i = 0; i < scenario.mcs_count; ++i)
        for (std::size_t g = 0; g < scenario.groups.size(); ++g)
            table.nu(i, static_cast<Eigen::Index>(g)) =
                capacity(i, scenario.groups[g], scenario, criterion, kernels).load;
    return table;
}

}  // namespace loraplan
