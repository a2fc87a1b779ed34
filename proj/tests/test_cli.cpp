#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "loraplan/csv_io.hpp"
#include "loraplan/manifest.hpp"
#include "loraplan/scenario_io.hpp"
#include "support.hpp"

using namespace loraplan;
namespace fs = std::filesystem;

namespace {

std::string cli() { return std::string("'") + LORAPLAN_CLI + "'"; }

std::string scenario_arg(const std::string& name) {
    return " --scenario '" + testing::scenario_path(name).string() + "'";
}

std::string out_arg(const fs::path& dir) { return " --out '" + dir.string() + "'"; }

const char* kTable2Csv =
    "mcs,0,1,2\n"
    "0,1,0,0\n"
    "1,2,0,0\n"
    "2,4,0,0\n"
    "3,3,4,0\n"
    "4,0,96,36\n"
    "5,0,0,964\n";

}  // namespace

TEST_CASE("allocate reproduces the Table II CSV") {
    const fs::path dir = testing::scratch_dir("cli_alloc");
    const int code = testing::run_command(
        cli() + " allocate" + scenario_arg("three_groups.json") + " --capacities '" +
            testing::scenario_path("table1_capacities.csv").string() + "'" + out_arg(dir),
        dir / "log.txt");
    INFO(testing::read_text(dir / "log.txt"));
    CHECK(code == 0);
    CHECK(testing::read_text(dir / "allocation.csv") == kTable2Csv);
    const RunManifest m = read_manifest(dir / "manifest_allocate.json");
    CHECK(m.config_digest == scenario_digest(testing::load_named("three_groups.json")));
    CHECK(m.tool_version == tool_version());
    CHECK(m.outputs.size() == 1);
    CHECK(m.command.find("allocate") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("allocation failure exits with status 2 and names the group") {
    const fs::path dir = testing::scratch_dir("cli_fail");
    const int code = testing::run_command(
        cli() + " allocate" + scenario_arg("three_groups_failure.json") + " --capacities '" +
            testing::scenario_path("table1_capacities.csv").string() + "'" + out_arg(dir),
        dir / "log.txt");
    const std::string log = testing::read_text(dir / "log.txt");
    INFO(log);
    CHECK(code == 2);
    CHECK(log.find("ALLOCATION FAILED: group group2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("usage and input errors exit with status 1") {
    const fs::path dir = testing::scratch_dir("cli_err");
    CHECK(testing::run_command(cli() + " allocate --bogus" + scenario_arg("three_groups.json"), dir / "a.txt") == 1);
    CHECK(testing::run_command(cli() + " allocate --scenario /nonexistent.json", dir / "b.txt") == 1);
    CHECK(testing::run_command(cli() + " frobnicate", dir / "c.txt") == 1);
    CHECK(testing::run_command(cli(), dir / "d.txt") == 1);
    CHECK(testing::run_command(cli() + " plr-curve" + scenario_arg("plr_distribution.json") +
                                   " --criterion median" + out_arg(dir),
                               dir / "e.txt") == 1);

    std::ofstream(dir / "bad.json") << R"({"groups": [{"n_motes": 1, "rate_per_mote": -1, "plr_target": 0.1}]})";
    CHECK(testing::run_command(cli() + " plr-curve --scenario '" + (dir / "bad.json").string() + "'" + out_arg(dir),
                               dir / "f.txt") == 1);
    CHECK(testing::read_text(dir / "f.txt").find("groups[0].rate_per_mote") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{\n\"groups\": [\n}\n";
    CHECK(testing::run_command(cli() + " plr-curve --scenario '" + (dir / "broken.json").string() + "'" + out_arg(dir),
                               dir / "g.txt") == 1);
    CHECK(testing::read_text(dir / "g.txt").find("broken.json:3:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("curve, CDF and capacity commands write their CSVs") {
    const fs::path dir = testing::scratch_dir("cli_curves");
    CHECK(testing::run_command(cli() + " plr-curve" + scenario_arg("plr_distribution.json") + out_arg(dir),
                               dir / "a.txt") == 0);
    const CsvTable curve = read_csv(dir / "plr_curve.csv");
    CHECK(curve.header == std::vector<std::string>{"x_m", "plr"});
    CHECK(curve.rows.size() == 513);

    CHECK(testing::run_command(cli() + " plr-cdf" + scenario_arg("plr_distribution.json") + out_arg(dir),
                               dir / "b.txt") == 0);
    const CsvTable cdf = read_csv(dir / "plr_cdf.csv");
    CHECK(cdf.header == std::vector<std::string>{"plr", "cdf"});
    CHECK(cdf.rows.back()[1] == 1.0);
    CHECK(testing::read_text(dir / "b.txt").find("share within 5% of max") != std::string::npos);

    CHECK(testing::run_command(cli() + " capacity" + scenario_arg("three_groups.json") + " --grid 128" + out_arg(dir),
                               dir / "c.txt") == 0);
    const Eigen::MatrixXd nu = read_capacity_csv(dir / "capacity.csv");
    CHECK(nu.rows() == 6);
    CHECK(nu.cols() == 3);
    CHECK((nu.array() > 0).all());
    CHECK(fs::exists(dir / "manifest_capacity.json"));
    fs::remove_all(dir);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
    const fs::path a = testing::scratch_dir("cli_sim_a");
    const fs::path b = testing::scratch_dir("cli_sim_b");
    const std::string args = scenario_arg("plr_distribution.json") + " --seeds 2 --seed 9 --duration 2000";
    CHECK(testing::run_command(cli() + " simulate" + args + out_arg(a), a / "log.txt") == 0);
    CHECK(testing::run_command(cli() + " simulate" + args + out_arg(b), b / "log.txt") == 0);
    for (const char* f : {"sim_bins.csv", "sim_motes_0.csv", "sim_motes_1.csv"}) {
        CHECK(fs::exists(a / f));
        CHECK(testing::read_text(a / f) == testing::read_text(b / f));
    }
    const RunManifest m = read_manifest(a / "manifest_simulate.json");
    CHECK(m.seeds.size() == 2);
    CHECK(m.outputs.size() == 3);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("validate writes the model overlay") {
    const fs::path dir = testing::scratch_dir("cli_validate");
    CHECK(testing::run_command(cli() + " validate" + scenario_arg("plr_distribution.json") +
                                   " --seeds 2 --duration 2000 --bins 10" + out_arg(dir),
                               dir / "log.txt") == 0);
    const CsvTable t = read_csv(dir / "validate.csv");
    CHECK(t.header == std::vector<std::string>{"x_bin_center", "plr_sim", "ci_low", "ci_high", "plr_model", "rel_dev", "agree"});
    CHECK(t.rows.size() == 10);
    fs::remove_all(dir);
}
