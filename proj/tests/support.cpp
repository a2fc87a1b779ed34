#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <sys/wait.h>

#include "json.hpp"
#include "loraplan/allocator.hpp"
#include "loraplan/analytic_model.hpp"
#include "loraplan/geometry.hpp"
#include "loraplan/scenario_io.hpp"
#include "loraplan/simulator.hpp"

namespace loraplan::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return fs::path(LORAPLAN_SOURCE_DIR); }

fs::path scenario_path(const std::string& name) { return source_dir() / "scenarios" / name; }

Scenario load_named(const std::string& name) { return load_scenario(scenario_path(name)); }

fs::path scratch_dir(const std::string& tag) {
    static std::random_device rd;
    const fs::path dir = fs::temp_directory_path() /
                         ("loraplan_" + tag + "_" + std::to_string(rd()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_command(const std::string& command, const fs::path& log) {
    std::string cmd = command;
    if (!log.empty()) cmd += " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double KernelEstimate::se(double p) const {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
}

KernelEstimate monte_carlo_kernels(double x, const PathLossParams<double>& params,
                                   std::int64_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tagged = path_loss(x, params);
    std::int64_t gw = 0, both = 0, one = 0, ack = 0;
    for (std::int64_t n = 0; n < samples; ++n) {
        const double r = params.radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        if (r <= 0.0) continue;  // measure zero, counted as a loss
        const double other = path_loss(r, params);
        if (tagged - other >= params.q)
            ++gw;
        else if (other - tagged >= params.q)
            ++one;
        else
            ++both;
        // ACK from the gateway against the interferer's uplink, at the mote
        const double d = std::hypot(r * std::cos(theta) - x, r * std::sin(theta));
        if (d > 0.0 && tagged - path_loss(d, params) >= params.q) ++ack;
    }
    const double n = static_cast<double>(samples);
    return {static_cast<double>(gw) / n, static_cast<double>(both) / n, static_cast<double>(one) / n,
            static_cast<double>(ack) / n, samples};
}

namespace {

using nlohmann::json;

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

// Shortest decimal text of `v` rounded to 3 significant digits, as a double.
double round3(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return std::stod(s.str());
}

Scenario random_sim_scenario(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_groups(1, 3);
    std::uniform_int_distribution<int> n_motes(1, 8);
    std::uniform_int_distribution<int> mcs_pick(2, 5);
    std::uniform_int_distribution<int> channels(1, 3);
    std::uniform_int_distribution<int> retries(0, 7);
    std::uniform_int_distribution<int> q_pick(0, 3);
    json groups = json::array();
    const int g_count = n_groups(rng);
    for (int g = 0; g < g_count; ++g)
        groups.push_back({{"name", "g" + std::to_string(g)},
                          {"n_motes", n_motes(rng)},
                          {"rate_per_mote", round3(log_uniform(rng, 1e-3, 0.2))},
                          {"plr_target", 0.01},
                          {"mcs", mcs_pick(rng)}});
    const int q = q_pick(rng);
    json root = {{"groups", groups},
                 {"main_channels", channels(rng)},
                 {"retry_limit", retries(rng)},
                 {"geometry", {{"q_db", q == 3 ? json("inf") : json(3 * q)}}}};
    return parse_scenario(root.dump());
}

}  // namespace

PropertyReport sim_accounting_suite(int cases, std::uint64_t seed) {
    PropertyReport rep{"simulator accounting identity"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> duration(200.0, 2000.0);
    for (int c = 0; c < cases; ++c) {
        const Scenario s = random_sim_scenario(rng);
        const auto counts = s.fixed_assignment().value();
        const SimConfig cfg = make_sim_config(s, counts, duration(rng), rng());
        const SimStats st = run(cfg);
        ++rep.cases;
        for (const auto& m : st.motes) {
            if (m.generated != m.delivered + m.discarded + m.dropped)
                rep.fail("case " + std::to_string(c) + " mote " + std::to_string(m.id) +
                         ": generated != delivered + discarded + dropped");
            if (!(m.plr() >= 0.0 && m.plr() <= 1.0)) rep.fail("case " + std::to_string(c) + ": PLR outside [0, 1]");
            if (m.first_ack_ok > m.first_data_ok || m.first_data_ok > m.first_attempts)
                rep.fail("case " + std::to_string(c) + ": first-attempt counters out of order");
        }
        if (c % 10 == 0 && !(run(cfg) == st)) rep.fail("case " + std::to_string(c) + ": rerun differs");
    }
    return rep;
}

PropertyReport allocator_suite(int cases, std::uint64_t seed) {
    PropertyReport rep{"allocator conservation/feasibility/determinism/monotonicity"};
    std::mt19937_64 rng(seed);
    const double rates[] = {0.0001, 0.0002, 0.00025, 0.0005, 0.001, 0.003};
    const double targets[] = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
    std::uniform_int_distribution<int> g_count(1, 4);
    std::uniform_int_distribution<int> m_count(1, 6);
    std::uniform_int_distribution<int> pick6(0, 5);
    std::uniform_int_distribution<int> pick5(0, 4);
    std::uniform_int_distribution<std::int64_t> motes(0, 2500);
    std::uniform_real_distribution<double> growth(1.2, 2.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int c = 0; c < cases; ++c) {
        const std::string tag = "case " + std::to_string(c);
        const int G = g_count(rng);
        const int M = m_count(rng);
        std::vector<GroupSpec> groups;
        for (int g = 0; g < G; ++g)
            groups.push_back({"g" + std::to_string(g), motes(rng), rates[pick6(rng)], targets[pick5(rng)], {}});
        Eigen::MatrixXd nu(M, G);
        for (int g = 0; g < G; ++g) {
            double v = unit(rng) < 0.1 ? 0.0 : round3(log_uniform(rng, 1e-4, 0.05));
            for (int i = 0; i < M; ++i) {
                nu(i, g) = v;
                v = v == 0.0 ? round3(log_uniform(rng, 1e-4, 0.01)) : round3(v * growth(rng));
            }
        }

        const Allocation a = allocate(groups, nu);
        ++rep.cases;

        // conservation
        std::vector<int> short_groups;
        for (int g = 0; g < G; ++g) {
            const std::int64_t placed = a.counts.col(g).sum();
            if ((a.counts.col(g).array() < 0).any()) rep.fail(tag + ": negative count");
            if (placed > groups[g].n_motes) rep.fail(tag + ": group over-placed");
            if (placed < groups[g].n_motes) short_groups.push_back(g);
        }
        if (a.success() && !short_groups.empty()) rep.fail(tag + ": success with unplaced motes");
        if (!a.success()) {
            std::vector<int> named;
            for (const auto& [g, left] : a.failure->unplaced) {
                named.push_back(g);
                if (left != groups[g].n_motes - a.counts.col(g).sum())
                    rep.fail(tag + ": unplaced count mismatch");
            }
            std::sort(named.begin(), named.end());
            if (named != short_groups) rep.fail(tag + ": failure names the wrong groups");
            if (std::find(named.begin(), named.end(), a.failure->first_unplaceable_group) == named.end())
                rep.fail(tag + ": first unplaceable group not among the short groups");
        }

        // exact feasibility
        for (int i = 0; i < M; ++i) {
            Rational load = 0;
            for (int g = 0; g < G; ++g) load += Rational(a.counts(i, g)) * decimal_rational(groups[g].rate_per_mote);
            if (load != a.exact_loads[static_cast<std::size_t>(i)]) rep.fail(tag + ": exact load mismatch");
            for (int g = 0; g < G; ++g)
                if (a.counts(i, g) > 0 && load > decimal_rational(nu(i, g)))
                    rep.fail(tag + ": load exceeds capacity of a present group");
        }

        // determinism
        const Allocation again = allocate(groups, nu);
        if (!(again.counts == a.counts) || again.success() != a.success())
            rep.fail(tag + ": allocation not deterministic");

        // monotonicity in capacities
        if (a.success()) {
            Eigen::MatrixXd bigger = nu;
            for (Eigen::Index k = 0; k < bigger.size(); ++k)
                if (unit(rng) < 0.5) bigger(k) = round3(bigger(k) * (1.0 + unit(rng)) + 1e-4 * unit(rng));
            bigger = bigger.cwiseMax(nu);
            if (!allocate(groups, bigger).success()) rep.fail(tag + ": larger capacities turned success into failure");
        }
    }
    return rep;
}

PropertyReport fixed_point_suite(int cases, std::uint64_t seed) {
    PropertyReport rep{"fixed point vs bisection"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> load(0.0, 10.0);
    std::uniform_real_distribution<double> t_data(0.005, 3.0);
    std::uniform_real_distribution<double> t_ack(0.0, 3.0);
    std::uniform_real_distribution<double> v(0.0, 1.0);
    for (int c = 0; c < cases; ++c) {
        const double L = c % 7 == 0 ? load(rng) * 1e-3 : load(rng);
        const double td = t_data(rng);
        const double ta = t_ack(rng);
        const double vg = c % 5 == 0 ? 0.0 : v(rng);
        const double fp = solve_data_success(L, td, ta, vg).value;
        const double bi = solve_data_success_bisection(L, td, ta, vg);
        ++rep.cases;
        if (!(std::abs(fp - bi) <= 1e-10))
            rep.fail("L=" + std::to_string(L) + " Td=" + std::to_string(td) + " Ta=" + std::to_string(ta) +
                     " V=" + std::to_string(vg) + ": |fp - bisection| = " + std::to_string(std::abs(fp - bi)));
        if (!(fp >= 0.0 && fp <= 1.0)) rep.fail("solution outside [0, 1]");
    }
    return rep;
}

PropertyReport cdf_suite(int cases, std::uint64_t seed) {
    PropertyReport rep{"CDF monotonicity"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_points(2, 40);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 0; c < cases; ++c) {
        const std::string tag = "case " + std::to_string(c);
        const double R = log_uniform(rng, 10.0, 5000.0);
        const int n = n_points(rng);
        std::vector<double> xs{0.0, R};
        for (int k = 2; k < n; ++k) xs.push_back(unit(rng) * R);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        Eigen::VectorXd y(x.size());
        // some profiles have flat stretches and repeated levels
        for (Eigen::Index k = 0; k < y.size(); ++k)
            y[k] = (c % 3 == 0 && k > 0 && unit(rng) < 0.3) ? y[k - 1] : unit(rng) * 0.2;
        const PlrProfile p(x, y, R);
        ++rep.cases;

        std::vector<double> levels{0.0, p.min_plr(), p.max_plr()};
        for (int k = 0; k < 50; ++k) levels.push_back(unit(rng) * 0.21);
        for (Eigen::Index k = 0; k < y.size(); ++k) levels.push_back(y[k]);
        std::sort(levels.begin(), levels.end());
        double prev = -1.0;
        double prev_inclusive = -1.0;
        for (double l : levels) {
            const double f = p.cdf(l);
            const double fi = p.cdf_inclusive(l);
            if (f < prev || fi < prev_inclusive) rep.fail(tag + ": CDF decreases");
            if (fi < f) {
                std::ostringstream os;
                os.precision(17);
                os << tag << ": P(PLR <= y) < P(PLR < y) at y = " << l << ": " << fi << " < " << f;
                rep.fail(os.str());
            }
            prev = f;
            prev_inclusive = fi;
        }
        if (p.cdf(p.min_plr()) != 0.0) rep.fail(tag + ": CDF positive at the minimum");
        if (p.cdf(std::nextafter(p.max_plr(), 1.0)) != 1.0) rep.fail(tag + ": CDF below 1 above the maximum");
        if (p.average_plr() > p.max_plr()) rep.fail(tag + ": average above maximum");
        const double q = 0.05 + 0.9 * unit(rng);
        const double yq = p.percentile(q);
        if (p.cdf_inclusive(yq) < q - 1e-12) rep.fail(tag + ": percentile below its level");
    }
    return rep;
}

}  // namespace loraplan::testing
