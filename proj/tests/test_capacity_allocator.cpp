#include "doctest.h"

#include <random>

#include "json.hpp"
#include "loraplan/allocator.hpp"
#include "loraplan/capacity.hpp"
#include "loraplan/csv_io.hpp"
#include "loraplan/scenario_io.hpp"
#include "support.hpp"

using namespace loraplan;

namespace {

const Scenario& three_groups() {
    static const Scenario s = testing::load_named("three_groups.json");
    return s;
}

Eigen::MatrixXd table1() { return read_capacity_csv(testing::scenario_path("table1_capacities.csv")); }

CountMatrix table2() {
    CountMatrix c(6, 3);
    c << 1, 0, 0,
         2, 0, 0,
         4, 0, 0,
         3, 4, 0,
         0, 96, 36,
         0, 0, 964;
    return c;
}

}  // namespace

TEST_CASE("criterion parsing") {
    CHECK(Criterion::parse("max") == Criterion::max());
    CHECK(Criterion::parse("average") == Criterion::average());
    CHECK(Criterion::parse("percentile=0.9").p == doctest::Approx(0.9));
    CHECK(Criterion::parse("percentile=90").p == doctest::Approx(0.9));
    CHECK(Criterion::parse(Criterion::percentile(0.75).to_string()) == Criterion::percentile(0.75));
    CHECK_THROWS(Criterion::parse("median"));
    CHECK_THROWS(Criterion::parse("percentile=abc"));
    CHECK_THROWS(Criterion::parse("percentile=0"));
}

TEST_CASE("capacity meets its definition") {
    const Scenario& s = three_groups();
    const auto kernels = make_kernel_grid(s.path_loss, s.model.grid_points);
    for (const auto& crit : {Criterion::max(), Criterion::average(), Criterion::percentile(0.9)})
        for (int i : {0, 3, 5})
            for (const auto& g : s.groups) {
                const auto r = capacity(i, g, s, crit, kernels);
                CHECK(r.bounded);
                CHECK(r.monotone);
                CHECK(statistic_at_load(i, g, s, crit, kernels, r.load) <= g.plr_target);
                CHECK(statistic_at_load(i, g, s, crit, kernels, r.load + g.rate_per_mote) > g.plr_target);
            }
}

TEST_CASE("a near-certain loss target admits any realistic load") {
    Scenario s = three_groups();
    s.groups[0].plr_target = 1.0 - 1e-9;
    const auto r = capacity(5, s.groups[0], s, Criterion::max());
    // far beyond anything a LoRa channel carries
    CHECK(r.load >= 50.0);
    const auto kernels = make_kernel_grid(s.path_loss, s.model.grid_points);
    for (double load : {0.01, 0.1, 1.0, 10.0})
        CHECK(statistic_at_load(5, s.groups[0], s, Criterion::max(), kernels, load) <= s.groups[0].plr_target);
}

TEST_CASE("capacity table ordering") {
    const Scenario& s = three_groups();
    const auto t = capacity_table(s, Criterion::max());
    REQUIRE(t.mcs_count() == 6);
    REQUIRE(t.group_count() == 3);
    for (int g = 0; g < 3; ++g)
        for (int i = 1; i < 6; ++i) {
            CHECK(t.nu(i, g) > t.nu(i - 1, g));
            // roughly doubles per MCS step, like the airtime
            CHECK(t.nu(i, g) / t.nu(i - 1, g) == doctest::Approx(2.0).epsilon(0.5));
        }
    for (int i = 0; i < 6; ++i)
        for (int g = 1; g < 3; ++g) {
            CHECK(t.nu(i, g) > t.nu(i, g - 1));
            const double ratio = t.nu(i, g) / t.nu(i, g - 1);
            CHECK(ratio >= 3.0);
            CHECK(ratio <= 20.0);
        }
}

TEST_CASE("decimal rationals") {
    CHECK(parse_decimal("0.0007") == Rational(7, 10000));
    CHECK(parse_decimal("2.5e-4") == Rational(1, 4000));
    CHECK(parse_decimal("-3") == Rational(-3));
    CHECK(parse_decimal("1E2") == Rational(100));
    CHECK(decimal_rational(0.0007) == Rational(7, 10000));
    CHECK(decimal_rational(0.1) == Rational(1, 10));
    CHECK_THROWS(parse_decimal("abc"));
    CHECK_THROWS(parse_decimal(""));
}

TEST_CASE("floor divisions are exact") {
    // 0.0007 / 0.0001 is 6.999... in binary floating point
    std::vector<GroupSpec> groups{{"a", 7, 0.0001, 1e-7, {}}};
    Eigen::MatrixXd nu(1, 1);
    nu << 0.0007;
    const auto a = allocate(groups, nu);
    CHECK(a.success());
    CHECK(a.counts(0, 0) == 7);
    CHECK(a.exact_loads[0] == Rational(7, 10000));
}

TEST_CASE("Table I capacities give the Table II assignment") {
    const auto a = allocate(three_groups(), CapacityTable{table1(), Criterion::max()});
    REQUIRE(a.success());
    CHECK(a.counts == table2());
    CHECK(a.exact_loads[4] == parse_decimal("0.0132"));
    CHECK(a.loads()[5] == doctest::Approx(0.0964));
}

TEST_CASE("twenty strict motes make group 2 unplaceable") {
    Scenario s = three_groups();
    s.groups[0].n_motes = 20;
    const auto a = allocate(s, CapacityTable{table1(), Criterion::max()});
    REQUIRE_FALSE(a.success());
    CHECK(a.failure->first_unplaceable_group == 2);
    REQUIRE(a.failure->unplaced.size() == 1);
    CHECK(a.failure->unplaced[0].first == 2);
    CHECK(a.failure->unplaced[0].second == 1000 - a.counts.col(2).sum());
    CHECK(a.counts.col(0).sum() == 20);
    CHECK(a.counts.col(1).sum() == 100);
    CHECK(a.failure->residual_capacity.size() == 6);
}

TEST_CASE("a single roomy group stays on MCS 0") {
    std::vector<GroupSpec> groups{{"a", 50, 0.0001, 1e-5, {}}};
    Eigen::MatrixXd nu = Eigen::MatrixXd::Constant(6, 1, 0.005);
    const auto a = allocate(groups, nu);
    REQUIRE(a.success());
    CHECK(a.counts(0, 0) == 50);
    CHECK(a.counts.col(0).sum() == 50);
}

TEST_CASE("allocate rejects mismatched capacity tables") {
    CHECK_THROWS(allocate(three_groups().groups, Eigen::MatrixXd::Ones(6, 2)));
}

TEST_CASE("allocator properties on random inputs") {
    const auto rep = testing::allocator_suite(2000, 77);
    INFO(rep.first_failure);
    CHECK(rep.ok());
}

TEST_CASE("verification of allocations") {
    const Scenario& s = three_groups();
    const auto empty = verify_allocation(CountMatrix::Zero(6, 3), s);
    CHECK(empty.max_plr.isZero());
    CHECK(empty.all_compliant);

    const auto rep = verify_allocation(table2(), s);
    CHECK(rep.all_compliant);
    for (int g = 0; g < 3; ++g) {
        CHECK(rep.compliant[static_cast<std::size_t>(g)]);
        CHECK(rep.per_group_worst[g] <= s.groups[static_cast<std::size_t>(g)].plr_target);
        CHECK(rep.per_group_worst[g] > 0.0);
    }
    CHECK(rep.max_plr(5, 0) == 0.0);  // group 0 is absent from MCS 5
}

TEST_CASE("own capacities: max criterion complies, average does not") {
    const Scenario& s = three_groups();
    const auto by_max = allocate(s, capacity_table(s, Criterion::max()));
    REQUIRE(by_max.success());
    CHECK(verify_allocation(by_max, s).all_compliant);

    const auto by_avg = allocate(s, capacity_table(s, Criterion::average()));
    REQUIRE(by_avg.success());
    CHECK_FALSE(verify_allocation(by_avg, s).all_compliant);
}

TEST_CASE("max-criterion allocations comply on random feasible scenarios") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int feasible = 0;
    for (int n = 0; n < 12; ++n) {
        nlohmann::json groups = nlohmann::json::array();
        const int G = 1 + static_cast<int>(unit(rng) * 3);
        for (int g = 0; g < G; ++g)
            groups.push_back({{"name", "g" + std::to_string(g)},
                              {"n_motes", 1 + static_cast<int>(unit(rng) * 150)},
                              {"rate_per_mote", std::vector<double>{0.0001, 0.0002, 0.0005}[static_cast<std::size_t>(unit(rng) * 3)]},
                              {"plr_target", std::vector<double>{1e-6, 1e-5, 1e-4, 1e-3}[static_cast<std::size_t>(unit(rng) * 4)]}});
        nlohmann::json root = {{"groups", groups},
                               {"main_channels", 1 + static_cast<int>(unit(rng) * 3)},
                               {"geometry", {{"q_db", 2 + 8 * unit(rng)}}},
                               {"model", {{"grid_points", 128}}}};
        const Scenario s = parse_scenario(root.dump());
        const auto a = allocate(s, capacity_table(s, Criterion::max()));
        if (!a.success()) continue;
        ++feasible;
        const auto rep = verify_allocation(a, s);
        INFO("scenario " << n << ": " << root.dump());
        CHECK(rep.all_compliant);
    }
    CHECK(feasible >= 6);
}
