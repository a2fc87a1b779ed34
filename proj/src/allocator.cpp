#include "loraplan/allocator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <stdexcept>
#include <string>

#include "loraplan/analytic_model.hpp"

namespace loraplan {

using boost::multiprecision::cpp_int;

Rational parse_decimal(std::string_view text) {
    auto fail = [&] { return std::invalid_argument("not a decimal number: '" + std::string(text) + "'"); };
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';

    cpp_int digits = 0;
    int scale = 0;  // number of fraction digits
    bool any = false;
    bool dot = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = digits * 10 + (c - '0');
            if (dot) ++scale;
            any = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!any) throw fail();
    int exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        const auto* first = text.data() + i;
        const auto* last = text.data() + text.size();
        if (first != last && *first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, last, exponent);
        if (ec != std::errc()) throw fail();
        i = static_cast<std::size_t>(ptr - text.data());
    }
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i != text.size()) throw fail();

    const int power = exponent - scale;
    Rational value(digits);
    if (power > 0) value *= Rational(boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(power)));
    if (power < 0) value /= Rational(boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(-power)));
    return negative ? Rational(-value) : value;
}

Rational decimal_rational(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::invalid_argument("decimal_rational: cannot format value");
    return parse_decimal(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

Eigen::VectorXd Allocation::loads() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(exact_loads.size()));
    for (std::size_t i = 0; i < exact_loads.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = exact_loads[i].convert_to<double>();
    return v;
}

namespace {

std::int64_t floor_div_nonneg(const Rational& num, const Rational& den) {
    if (num <= 0) return 0;
    const Rational q = num / den;
    const cpp_int whole = boost::multiprecision::numerator(q) / boost::multiprecision::denominator(q);
    return whole.convert_to<std::int64_t>();
}

}  // namespace

Allocation allocate(const std::vector<GroupSpec>& groups, const Eigen::MatrixXd& nu) {
    const auto n_groups = static_cast<Eigen::Index>(groups.size());
    const Eigen::Index m_count = nu.rows();
    if (nu.cols() != n_groups)
        throw std::invalid_argument("allocate: capacity table has " + std::to_string(nu.cols()) +
                                    " groups, scenario has " + std::to_string(n_groups));
    if (m_count < 1) throw std::invalid_argument("allocate: empty capacity table");
    if ((nu.array() < 0.0).any() || !nu.allFinite())
        throw std::invalid_argument("allocate: capacities must be finite and non-negative");

    std::vector<Rational> rate(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (!(groups[g].rate_per_mote > 0.0)) throw std::invalid_argument("allocate: rates must be positive");
        rate[g] = decimal_rational(groups[g].rate_per_mote);
    }
    std::vector<std::vector<Rational>> cap(static_cast<std::size_t>(m_count),
                                           std::vector<Rational>(groups.size()));
    for (Eigen::Index i = 0; i < m_count; ++i)
        for (Eigen::Index g = 0; g < n_groups; ++g)
            cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(g)] = decimal_rational(nu(i, g));

    std::vector<int> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return groups[static_cast<std::size_t>(a)].plr_target < groups[static_cast<std::size_t>(b)].plr_target;
    });

    Allocation out;
    out.counts = CountMatrix::Zero(m_count, n_groups);
    out.exact_loads.assign(static_cast<std::size_t>(m_count), Rational(0));
    // binding capacity of each MCS given the groups already on it
    std::vector<std::optional<Rational>> binding(static_cast<std::size_t>(m_count));

    auto headroom = [&](Eigen::Index m) -> Rational {
        const auto mi = static_cast<std::size_t>(m);
        if (!binding[mi]) return Rational(0);
        return *binding[mi] - out.exact_loads[mi];
    };

    Eigen::Index cursor = 0;
    for (const int g : order) {
        const auto gi = static_cast<std::size_t>(g);
        std::int64_t remaining = groups[gi].n_motes;
        while (remaining > 0 && cursor < m_count) {
            const auto mi = static_cast<std::size_t>(cursor);
            Rational limit = cap[mi][gi];
            if (binding[mi]) limit = std::min(limit, *binding[mi]);
            const std::int64_t fit = floor_div_nonneg(limit - out.exact_loads[mi], rate[gi]);
            const std::int64_t n = std::min(fit, remaining);
            if (n > 0) {
                out.counts(cursor, g) += n;
                out.exact_loads[mi] += Rational(n) * rate[gi];
                binding[mi] = limit;
                remaining -= n;
            }
            if (remaining > 0) ++cursor;
        }
        if (remaining > 0) {
            if (!out.failure) {
                out.failure.emplace();
                out.failure->first_unplaceable_group = g;
            }
            out.failure->unplaced.emplace_back(g, remaining);
        }
    }

    if (out.failure) {
        out.failure->residual_capacity.resize(m_count);
        for (Eigen::Index m = 0; m < m_count; ++m) {
            const auto mi = static_cast<std::size_t>(m);
            // an untouched MCS has the full headroom of the strictest group
            Rational room = binding[mi] ? headroom(m) : cap[mi][static_cast<std::size_t>(order.front())];
            out.failure->residual_capacity[m] = room.convert_to<double>();
        }
    }
    return out;
}

Allocation allocate(const Scenario& scenario, const CapacityTable& capacities) {
    if (capacities.mcs_count() != scenario.mcs_count)
        throw std::invalid_argument("allocate: capacity table has " +
                                    std::to_string(capacities.mcs_count()) + " MCSs, scenario has " +
                                    std::to_string(scenario.mcs_count));
    return allocate(scenario.groups, capacities.nu);
}

ComplianceReport verify_allocation(const CountMatrix& counts, const Scenario& scenario) {
    const auto n_groups = static_cast<Eigen::Index>(scenario.groups.size());
    if (counts.rows() != scenario.mcs_count || counts.cols() != n_groups)
        throw std::invalid_argument("verify_allocation: count matrix shape does not match the scenario");

    const LoadVector loads(counts, scenario.groups);
    ComplianceReport report;
    report.max_plr = Eigen::MatrixXd::Zero(scenario.mcs_count, n_groups);
    report.per_mcs_max_plr = Eigen::VectorXd::Zero(scenario.mcs_count);
    report.per_group_worst = Eigen::VectorXd::Zero(n_groups);
    report.compliant.assign(static_cast<std::size_t>(n_groups), true);

    std::optional<KernelGrid> kernels;
    for (int m = 0; m < scenario.mcs_count; ++m) {
        for (Eigen::Index g = 0; g < n_groups; ++g) {
            if (counts(m, g) == 0) continue;
            if (!kernels) kernels = make_kernel_grid(scenario.path_loss, scenario.model.grid_points);
            const auto& grp = scenario.groups[static_cast<std::size_t>(g)];
            const double worst = plr_profile(m, grp, loads, scenario, *kernels).max_plr();
            report.max_plr(m, g) = worst;
            report.per_mcs_max_plr[m] = std::max(report.per_mcs_max_plr[m], worst);
            report.per_group_worst[g] = std::max(report.per_group_worst[g], worst);
        }
    }
    for (Eigen::Index g = 0; g < n_groups; ++g) {
        const bool ok = report.per_group_worst[g] <= scenario.groups[static_cast<std::size_t>(g)].plr_target;
        report.compliant[static_cast<std::size_t>(g)] = ok;
        report.all_compliant = report.all_compliant && ok;
    }
    return report;
}

}  // namespace loraplan
