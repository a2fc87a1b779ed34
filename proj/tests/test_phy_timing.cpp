#include "doctest.h"

#include <stdexcept>

#include "loraplan/errors.hpp"
#include "loraplan/phy_timing.hpp"

using namespace loraplan;

TEST_CASE("airtime matches hand-evaluated LoRa frames") {
    const PhyConfig phy;
    // 8.192 ms of payload symbols plus a 12.25 symbol preamble at 1.024 ms
    CHECK(airtime(7, 0, phy, LinkDirection::downlink) == doctest::Approx(0.020736).epsilon(1e-12));
    CHECK(airtime(7, 51, phy) == doctest::Approx(0.102656).epsilon(1e-12));
    // SF12 switches on low data rate optimization
    CHECK(airtime(12, 51, phy) == doctest::Approx(2.465792).epsilon(1e-12));
}

TEST_CASE("uplink CRC adds symbols, downlink has none") {
    const PhyConfig phy;
    CHECK(airtime(7, 20, phy, LinkDirection::uplink) > airtime(7, 20, phy, LinkDirection::downlink));
}

TEST_CASE("SF12 over SF7 airtime stays within the 2^5 band") {
    const PhyConfig phy;
    for (int bytes = 0; bytes <= 255; ++bytes) {
        const double ratio = airtime(12, bytes, phy) / airtime(7, bytes, phy);
        CHECK(ratio >= 16.0);
        CHECK(ratio <= 64.0);
    }
}

TEST_CASE("doubling the bandwidth halves the airtime") {
    PhyConfig narrow;
    narrow.ldro = LdroMode::never;
    PhyConfig wide = narrow;
    wide.bandwidth_hz = 2 * narrow.bandwidth_hz;
    for (int sf = 7; sf <= 12; ++sf)
        for (int bytes : {0, 1, 13, 51, 255})
            CHECK(airtime(sf, bytes, wide) == doctest::Approx(airtime(sf, bytes, narrow) / 2).epsilon(1e-15));
}

TEST_CASE("airtime increases in payload and spreading factor") {
    for (auto ldro : {LdroMode::automatic, LdroMode::always, LdroMode::never}) {
        PhyConfig phy;
        phy.ldro = ldro;
        for (int sf = 7; sf <= 12; ++sf)
            for (int bytes = 0; bytes < 255; ++bytes) {
                // payload symbols come in blocks, so compare against the next block
                if (bytes + 8 <= 255) CHECK(airtime(sf, bytes + 8, phy) > airtime(sf, bytes, phy));
                CHECK(airtime(sf, bytes + 1, phy) >= airtime(sf, bytes, phy));
                if (sf < 12) CHECK(airtime(sf + 1, bytes, phy) > airtime(sf, bytes, phy));
            }
    }
}

TEST_CASE("airtime rejects out-of-range inputs") {
    const PhyConfig phy;
    CHECK_THROWS_AS(airtime(6, 10, phy), std::out_of_range);
    CHECK_THROWS_AS(airtime(13, 10, phy), std::out_of_range);
    CHECK_THROWS_AS(airtime(7, -1, phy), std::out_of_range);
    CHECK_THROWS_AS(airtime(7, 256, phy), std::out_of_range);
}

TEST_CASE("PHY validation names the field") {
    PhyConfig phy;
    phy.coding_rate = 5;
    try {
        phy.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "phy.coding_rate");
    }
}

TEST_CASE("MCS table maps index to SF 12 - index") {
    const PhyConfig phy;
    const McsTable t = build_mcs_table(phy, 6);
    REQUIRE(t.size() == 6);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t[i].index == static_cast<int>(i));
        CHECK(t[i].spreading_factor == 12 - static_cast<int>(i));
        CHECK(t[i].t_data == airtime(12 - static_cast<int>(i), 51, phy));
        CHECK(t[i].t_ack == airtime(12 - static_cast<int>(i), 0, phy, LinkDirection::downlink));
        if (i > 0) {
            CHECK(t[i].t_data < t[i - 1].t_data);
            CHECK(t[i].t_ack < t[i - 1].t_ack);
        }
    }
    CHECK(t[0].t_data / t[5].t_data >= 16.0);
    CHECK(t.slowest().spreading_factor == 12);
    CHECK(build_mcs_table(phy, 2).size() == 2);
    CHECK_THROWS_AS(build_mcs_table(phy, 0), ValidationError);
    CHECK_THROWS_AS(build_mcs_table(phy, 7), ValidationError);
}

TEST_CASE("radio timing validation") {
    RadioTiming t;
    CHECK_NOTHROW(t.validate(6));
    t.t2 = 0.5;
    CHECK_THROWS_AS(t.validate(6), ValidationError);
    t = RadioTiming{};
    t.delta_m = 6;
    CHECK_THROWS_AS(t.validate(6), ValidationError);
    t = RadioTiming{};
    t.retry_delay_max = 0.5;
    CHECK_THROWS_AS(t.validate(6), ValidationError);
}
