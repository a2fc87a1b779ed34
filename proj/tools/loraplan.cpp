// loraplan: PLR curves, capacities, MCS allocation and simulation from a
// scenario file. Exit status: 0 success, 2 allocation failure, 1 any error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loraplan/allocator.hpp"
#include "loraplan/analytic_model.hpp"
#include "loraplan/capacity.hpp"
#include "loraplan/csv_io.hpp"
#include "loraplan/errors.hpp"
#include "loraplan/manifest.hpp"
#include "loraplan/scenario_io.hpp"
#include "loraplan/simulator.hpp"

namespace fs = std::filesystem;
using namespace loraplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAllocationFailure = 2;

struct Options {
    std::string scenario;
    std::string criterion = "max";
    int grid = 0;
    std::string out = ".";
    std::string capacities;  // CSV, optional
    std::string counts;      // CSV, optional
    std::optional<int> mcs;
    int group = 0;
    int seeds = 10;
    std::uint64_t seed = 1;
    double duration = 1e5;
    int bins = 30;
    bool no_verify = false;
};

struct Context {
    Options opt;
    Scenario scenario;
    Criterion criterion;
    std::string command_line;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
    std::vector<std::string> outputs;
    std::vector<std::uint64_t> seeds;

    fs::path output(const std::string& name) {
        const fs::path p = fs::path(opt.out) / name;
        outputs.push_back(p.string());
        return p;
    }

    void finish(const std::string& command) {
        RunManifest m;
        m.config_digest = scenario_digest(scenario);
        m.tool_version = tool_version();
        m.command = command_line;
        m.seeds = seeds;
        m.outputs = outputs;
        m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const fs::path path = fs::path(opt.out) / ("manifest_" + command + ".json");
        write_manifest(path, m);
        std::printf("manifest: %s\n", path.string().c_str());
    }
};

Context load_context(const Options& opt, const std::string& command_line) {
    Context ctx;
    ctx.opt = opt;
    ctx.command_line = command_line;
    ctx.scenario = load_scenario(opt.scenario);
    if (opt.grid != 0) {
        ctx.scenario.model.grid_points = opt.grid;
        ctx.scenario.validate();
    }
    ctx.criterion = Criterion::parse(opt.criterion);
    fs::create_directories(opt.out);
    return ctx;
}

Eigen::MatrixXd capacities_for(const Context& ctx) {
    if (!ctx.opt.capacities.empty()) {
        Eigen::MatrixXd nu = read_capacity_csv(ctx.opt.capacities);
        if (nu.rows() != ctx.scenario.mcs_count || nu.cols() != static_cast<Eigen::Index>(ctx.scenario.groups.size()))
            throw std::invalid_argument("capacity CSV '" + ctx.opt.capacities + "' is " +
                                        std::to_string(nu.rows()) + "x" + std::to_string(nu.cols()) +
                                        ", scenario needs " + std::to_string(ctx.scenario.mcs_count) + "x" +
                                        std::to_string(ctx.scenario.groups.size()));
        return nu;
    }
    return capacity_table(ctx.scenario, ctx.criterion).nu;
}

// Counts from --counts, else the scenario's own assignment, else an allocation.
CountMatrix counts_for(const Context& ctx) {
    if (!ctx.opt.counts.empty()) {
        CountMatrix c = read_counts_csv(ctx.opt.counts);
        if (c.rows() != ctx.scenario.mcs_count || c.cols() != static_cast<Eigen::Index>(ctx.scenario.groups.size()))
            throw std::invalid_argument("count CSV shape does not match the scenario");
        return c;
    }
    if (auto fixed = ctx.scenario.fixed_assignment()) return *fixed;
    const auto alloc = allocate(ctx.scenario.groups, capacities_for(ctx));
    if (!alloc.success())
        throw std::runtime_error("scenario has no fixed MCS assignment and allocation failed; "
                                 "give mcs/mcs_counts per group or --counts");
    return alloc.counts;
}

int pick_mcs(const Context& ctx, const CountMatrix& counts) {
    const int g = ctx.opt.group;
    if (g < 0 || g >= static_cast<int>(ctx.scenario.groups.size()))
        throw std::invalid_argument("--group " + std::to_string(g) + " does not exist");
    if (ctx.opt.mcs) {
        if (*ctx.opt.mcs < 0 || *ctx.opt.mcs >= ctx.scenario.mcs_count)
            throw std::invalid_argument("--mcs outside 0.." + std::to_string(ctx.scenario.mcs_count - 1));
        return *ctx.opt.mcs;
    }
    Eigen::Index best = 0;
    counts.col(g).maxCoeff(&best);
    return static_cast<int>(best);
}

void print_matrix(const Context& ctx, const Eigen::MatrixXd& m, const char* fmt, const char* title) {
    std::printf("%s\n%-5s", title, "MCS");
    for (const auto& g : ctx.scenario.groups) std::printf(" %14s", g.name.c_str());
    std::printf("\n");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::printf("%-5ld", static_cast<long>(i));
        for (Eigen::Index g = 0; g < m.cols(); ++g) std::printf(fmt, m(i, g));
        std::printf("\n");
    }
}

int cmd_plr_curve(Context& ctx) {
    const auto counts = counts_for(ctx);
    const int mcs = pick_mcs(ctx, counts);
    const auto& group = ctx.scenario.groups[static_cast<std::size_t>(ctx.opt.group)];
    const LoadVector loads(counts, ctx.scenario.groups);
    const auto profile = plr_profile(mcs, group, loads, ctx.scenario, ctx.scenario.model.grid_points);

    write_csv(ctx.output("plr_curve.csv"), curve_table("x_m", "plr", profile.x(), profile.plr()));
    std::printf("group %s on MCS %d, MCS load %.6g fr/s\n", group.name.c_str(), mcs, loads.load(mcs));
    std::printf("%10s %14s\n", "x_m", "plr");
    const double radius = ctx.scenario.path_loss.radius;
    for (int k = 0; k <= 12; ++k) {
        const double x = radius * k / 12.0;
        std::printf("%10.1f %14.6e\n", x, profile.interpolate(x));
    }
    std::printf("max %.6e at x = %.1f m (capture horizon %.1f m), average %.6e\n", profile.max_plr(),
                profile.argmax(), ctx.scenario.path_loss.capture_horizon(), profile.average_plr());
    ctx.finish("plr-curve");
    return kExitOk;
}

int cmd_plr_cdf(Context& ctx) {
    const auto counts = counts_for(ctx);
    const int mcs = pick_mcs(ctx, counts);
    const auto& group = ctx.scenario.groups[static_cast<std::size_t>(ctx.opt.group)];
    const LoadVector loads(counts, ctx.scenario.groups);
    const auto profile = plr_profile(mcs, group, loads, ctx.scenario, ctx.scenario.model.grid_points);

    const auto curve = profile.cdf_curve(ctx.scenario.model.grid_points);
    CsvTable t;
    t.header = {"plr", "cdf"};
    for (const auto& [y, c] : curve) t.rows.push_back({y, c});
    write_csv(ctx.output("plr_cdf.csv"), t);

    std::printf("group %s on MCS %d\n", group.name.c_str(), mcs);
    std::printf("%-28s %14.6e\n", "max PLR", profile.max_plr());
    std::printf("%-28s %14.6e\n", "average PLR", profile.average_plr());
    std::printf("%-28s %14.4f\n", "max / average", profile.max_plr() / profile.average_plr());
    std::printf("%-28s %14.4f\n", "share within 5% of max", profile.mass_near_max(0.95));
    for (double p : {0.5, 0.9, 0.99})
        std::printf("%-28s %14.6e\n", ("percentile " + format_number(p)).c_str(), profile.percentile(p));
    ctx.finish("plr-cdf");
    return kExitOk;
}

int cmd_capacity(Context& ctx) {
    const auto table = capacity_table(ctx.scenario, ctx.criterion);
    write_capacity_csv(ctx.output("capacity.csv"), table.nu);
    print_matrix(ctx, table.nu, " %14.6g", ("capacity, fr/s (criterion " + ctx.criterion.to_string() + ")").c_str());
    ctx.finish("capacity");
    return kExitOk;
}

int cmd_allocate(Context& ctx) {
    const Eigen::MatrixXd nu = capacities_for(ctx);
    const auto alloc = allocate(ctx.scenario.groups, nu);
    write_counts_csv(ctx.output("allocation.csv"), alloc.counts);
    print_matrix(ctx, alloc.counts.cast<double>(), " %14.0f", "motes per MCS");

    if (!alloc.success()) {
        const auto& f = *alloc.failure;
        const auto& groups = ctx.scenario.groups;
        std::printf("ALLOCATION FAILED: group %s (index %d) cannot be placed\n",
                    groups[static_cast<std::size_t>(f.first_unplaceable_group)].name.c_str(),
                    f.first_unplaceable_group);
        for (const auto& [g, left] : f.unplaced)
            std::printf("  group %s: %lld motes without an MCS\n", groups[static_cast<std::size_t>(g)].name.c_str(),
                        static_cast<long long>(left));
        std::printf("  residual capacity per MCS (fr/s):");
        for (Eigen::Index i = 0; i < f.residual_capacity.size(); ++i) std::printf(" %.6g", f.residual_capacity[i]);
        std::printf("\n");
        ctx.finish("allocate");
        return kExitAllocationFailure;
    }

    if (!ctx.opt.no_verify) {
        const auto report = verify_allocation(alloc.counts, ctx.scenario);
        std::printf("%-5s %14s\n", "MCS", "max PLR");
        for (Eigen::Index i = 0; i < report.per_mcs_max_plr.size(); ++i)
            std::printf("%-5ld %14.3e\n", static_cast<long>(i), report.per_mcs_max_plr[i]);
        for (std::size_t g = 0; g < ctx.scenario.groups.size(); ++g)
            std::printf("group %s: worst PLR %.3e, target %.3e, %s\n", ctx.scenario.groups[g].name.c_str(),
                        report.per_group_worst[static_cast<Eigen::Index>(g)], ctx.scenario.groups[g].plr_target,
                        report.compliant[g] ? "met" : "VIOLATED");
    }
    ctx.finish("allocate");
    return kExitOk;
}

struct SimOutcome {
    std::vector<SimStats> runs;
    std::vector<DistanceBin> bins;
};

SimOutcome simulate(Context& ctx, std::optional<int> mcs, std::optional<int> group) {
    SimConfig cfg = make_sim_config(ctx.scenario, counts_for(ctx), ctx.opt.duration, ctx.opt.seed);
    cfg.bins = ctx.opt.bins;
    if (ctx.opt.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
    SimOutcome out;
    if (ctx.opt.seeds == 1) {
        out.runs.push_back(run(cfg));
        out.bins = bin_by_distance(out.runs[0].motes, ctx.scenario.path_loss.radius, cfg.bins, mcs, group);
        ctx.seeds = {cfg.seed};
    } else {
        auto rep = replicate(cfg, ctx.opt.seeds, mcs, group);
        out.runs = std::move(rep.runs);
        out.bins = std::move(rep.bins);
        ctx.seeds = rep.seeds;
    }
    return out;
}

int cmd_simulate(Context& ctx) {
    const auto sim = simulate(ctx, std::nullopt, std::nullopt);
    write_csv(ctx.output("sim_bins.csv"), sim_bins_table(sim.bins));
    for (std::size_t k = 0; k < sim.runs.size(); ++k)
        write_csv(ctx.output("sim_motes_" + std::to_string(k) + ".csv"), sim_motes_table(sim.runs[k].motes));

    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    for (const auto& r : sim.runs) {
        generated += r.generated();
        delivered += r.delivered();
    }
    std::printf("%zu run(s), %lld frames generated, %lld delivered, PLR %.6e\n", sim.runs.size(),
                static_cast<long long>(generated), static_cast<long long>(delivered),
                generated ? 1.0 - static_cast<double>(delivered) / static_cast<double>(generated) : 0.0);
    std::printf("%10s %12s %12s %12s\n", "x_m", "plr", "ci_low", "ci_high");
    for (const auto& b : sim.bins)
        std::printf("%10.1f %12.4e %12.4e %12.4e\n", b.center, b.plr, b.ci_low, b.ci_high);
    ctx.finish("simulate");
    return kExitOk;
}

int cmd_validate(Context& ctx) {
    const auto counts = counts_for(ctx);
    const int mcs = pick_mcs(ctx, counts);
    const auto& group = ctx.scenario.groups[static_cast<std::size_t>(ctx.opt.group)];
    const LoadVector loads(counts, ctx.scenario.groups);
    const auto profile = plr_profile(mcs, group, loads, ctx.scenario, ctx.scenario.model.grid_points);
    const auto sim = simulate(ctx, mcs, ctx.opt.group);

    const double width = ctx.scenario.path_loss.radius / ctx.opt.bins;
    CsvTable t;
    t.header = {"x_bin_center", "plr_sim", "ci_low", "ci_high", "plr_model", "rel_dev", "agree"};
    int agree = 0;
    int populated = 0;
    std::printf("group %s on MCS %d\n", group.name.c_str(), mcs);
    std::printf("%10s %12s %12s %12s %12s %9s\n", "x_m", "sim", "ci_low", "ci_high", "model", "rel_dev");
    for (const auto& b : sim.bins) {
        const double model = profile.average_over(b.center - width / 2, b.center + width / 2);
        const double rel = model > 0.0 ? (b.plr - model) / model : std::numeric_limits<double>::quiet_NaN();
        const bool ok = !std::isnan(b.plr) &&
                        ((model >= b.ci_low && model <= b.ci_high) || std::abs(b.plr - model) <= 0.15 * model);
        if (!std::isnan(b.plr)) {
            ++populated;
            agree += ok;
        }
        t.rows.push_back({b.center, b.plr, b.ci_low, b.ci_high, model, rel, ok ? 1.0 : 0.0});
        std::printf("%10.1f %12.4e %12.4e %12.4e %12.4e %9.3f%s\n", b.center, b.plr, b.ci_low, b.ci_high, model, rel,
                    ok ? "" : "  *");
    }
    write_csv(ctx.output("validate.csv"), t);
    std::printf("bins agreeing (model inside 95%% CI or within 15%%): %d of %d\n", agree, populated);
    ctx.finish("validate");
    return kExitOk;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoRaWAN packet-loss model, MCS allocation and simulation"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    Options opt;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", opt.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--criterion", opt.criterion, "max, average or percentile=<p>");
        sub->add_option("--grid", opt.grid, "Distance grid points (overrides the scenario)");
        sub->add_option("--out", opt.out, "Output directory");
    };
    auto curve_opts = [&](CLI::App* sub) {
        sub->add_option("--mcs", opt.mcs, "MCS index (default: the group's most used MCS)");
        sub->add_option("--group", opt.group, "Group index");
        sub->add_option("--capacities", opt.capacities, "Capacity CSV used when the scenario has no assignment");
        sub->add_option("--counts", opt.counts, "Allocation CSV (motes per MCS and group)");
    };
    auto sim_opts = [&](CLI::App* sub) {
        sub->add_option("--seeds", opt.seeds, "Number of replications");
        sub->add_option("--seed", opt.seed, "Base seed");
        sub->add_option("--duration", opt.duration, "Simulated seconds per replication");
        sub->add_option("--bins", opt.bins, "Distance bins");
    };

    auto* plr_curve = app.add_subcommand("plr-curve", "PLR as a function of distance");
    common(plr_curve);
    curve_opts(plr_curve);
    auto* plr_cdf = app.add_subcommand("plr-cdf", "Distribution of PLR over the cell");
    common(plr_cdf);
    curve_opts(plr_cdf);
    auto* capacity = app.add_subcommand("capacity", "Capacity per MCS and group");
    common(capacity);
    auto* alloc = app.add_subcommand("allocate", "Greedy MCS allocation");
    common(alloc);
    alloc->add_option("--capacities", opt.capacities, "Capacity CSV instead of computing it");
    alloc->add_flag("--no-verify", opt.no_verify, "Skip the per-MCS PLR check of the result");
    auto* sim = app.add_subcommand("simulate", "Discrete-event simulation");
    common(sim);
    sim_opts(sim);
    sim->add_option("--capacities", opt.capacities, "Capacity CSV used when the scenario has no assignment");
    sim->add_option("--counts", opt.counts, "Allocation CSV (motes per MCS and group)");
    auto* validate = app.add_subcommand("validate", "Model against simulation, per distance bin");
    common(validate);
    curve_opts(validate);
    sim_opts(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        Context ctx = load_context(opt, join_args(argc, argv));
        if (*plr_curve) return cmd_plr_curve(ctx);
        if (*plr_cdf) return cmd_plr_cdf(ctx);
        if (*capacity) return cmd_capacity(ctx);
        if (*alloc) return cmd_allocate(ctx);
        if (*sim) return cmd_simulate(ctx);
        if (*validate) return cmd_validate(ctx);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "invalid scenario: %s\n", e.what());
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
    }
    return kExitError;
}
