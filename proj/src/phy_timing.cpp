#include "loraplan/phy_timing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "loraplan/errors.hpp"

namespace loraplan {

void PhyConfig::validate() const {
    if (!(bandwidth_hz > 0.0)) throw ValidationError("phy.bandwidth_hz", "must be positive");
    if (coding_rate < 1 || coding_rate > 4)
        throw ValidationError("phy.coding_rate", "must be in [1, 4] (4/5 .. 4/8)");
    if (preamble_symbols < 6) throw ValidationError("phy.preamble_symbols", "must be at least 6");
    if (payload_bytes < 0 || payload_bytes > kMaxPayloadBytes)
        throw ValidationError("phy.payload_bytes", "must be in [0, 255]");
    if (ack_payload_bytes < 0 || ack_payload_bytes > kMaxPayloadBytes)
        throw ValidationError("phy.ack_payload_bytes", "must be in [0, 255]");
}

double airtime(int spreading_factor, int payload_bytes, const PhyConfig& phy,
               LinkDirection direction) {
    if (spreading_factor < kMinSpreadingFactor || spreading_factor > kMaxSpreadingFactor)
        throw std::out_of_range("spreading factor " + std::to_string(spreading_factor) +
                                " outside [7, 12]");
    if (payload_bytes < 0 || payload_bytes > kMaxPayloadBytes)
        throw std::out_of_range("payload of " + std::to_string(payload_bytes) +
                                " bytes outside [0, 255]");
    phy.validate();

    const double t_sym = std::ldexp(1.0, spreading_factor) / phy.bandwidth_hz;
    bool ldro = false;
    switch (phy.ldro) {
        case LdroMode::automatic: ldro = t_sym >= 16e-3; break;
        case LdroMode::always: ldro = true; break;
        case LdroMode::never: ldro = false; break;
    }
    const bool crc = direction == LinkDirection::uplink ? phy.uplink_crc : phy.downlink_crc;

    const int numerator = 8 * payload_bytes - 4 * spreading_factor + 28 + (crc ? 16 : 0) -
                          (phy.explicit_header ? 0 : 20);
    const int denominator = 4 * (spreading_factor - (ldro ? 2 : 0));
    // ceil for a possibly negative numerator
    int blocks = numerator <= 0 ? 0 : (numerator + denominator - 1) / denominator;
    const int payload_symbols = 8 + std::max(blocks * (phy.coding_rate + 4), 0);

    const double preamble = (phy.preamble_symbols + 4.25) * t_sym;
    return preamble + payload_symbols * t_sym;
}

McsTable::McsTable(std::vector<McsParams> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.index != static_cast<int>(i))
            throw std::invalid_argument("MCS table entries must be indexed 0..M-1 in order");
        if (!(e.t_data > 0.0) || !(e.t_ack > 0.0))
            throw std::invalid_argument("MCS airtimes must be positive");
        if (i > 0 && !(e.t_data < entries_[i - 1].t_data && e.t_ack < entries_[i - 1].t_ack))
            throw std::invalid_argument("MCS airtimes must strictly decrease with the index");
    }
}

Eigen::VectorXd McsTable::data_durations() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) v[static_cast<Eigen::Index>(i)] = entries_[i].t_data;
    return v;
}

Eigen::VectorXd McsTable::ack_durations() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) v[static_cast<Eigen::Index>(i)] = entries_[i].t_ack;
    return v;
}

McsTable build_mcs_table(const PhyConfig& phy, int payload_bytes, int mcs_count) {
    if (mcs_count < 1 || mcs_count > kMaxMcsCount)
        throw ValidationError("mcs_count", "must be in [1, 6]");
    std::vector<McsParams> entries;
    entries.reserve(static_cast<std::size_t>(mcs_count));
    for (int i = 0; i < mcs_count; ++i) {
        const int sf = kMaxSpreadingFactor - i;
        entries.push_back({i, sf, airtime(sf, payload_bytes, phy, LinkDirection::uplink),
                           airtime(sf, phy.ack_payload_bytes, phy, LinkDirection::downlink)});
    }
    return McsTable(std::move(entries));
}

void RadioTiming::validate(int mcs_count) const {
    if (!(t1 > 0.0)) throw ValidationError("timing.t1_s", "must be positive");
    if (!(t2 > t1)) throw ValidationError("timing.t2_s", "must exceed t1_s");
    if (delta_m < 0 || delta_m >= mcs_count)
        throw ValidationError("timing.delta_m", "must be in [0, mcs_count)");
    if (!(retry_delay_min > 0.0))
        throw ValidationError("timing.retry_delay_min_s", "must be positive");
    if (!(retry_delay_max >= retry_delay_min))
        throw ValidationError("timing.retry_delay_max_s", "must be >= retry_delay_min_s");
}

}  // namespace loraplan
