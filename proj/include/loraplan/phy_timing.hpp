#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace loraplan {

/// Low data rate optimization policy. `automatic` enables it when the symbol
/// time reaches 16 ms (SF11 and SF12 at 125 kHz).
enum class LdroMode { automatic, always, never };

enum class LinkDirection { uplink, downlink };

/// LoRa modulation settings shared by every MCS.
struct PhyConfig {
    double bandwidth_hz = 125e3;
    int coding_rate = 1;          // 1..4 for CR 4/5..4/8
    int preamble_symbols = 8;
    bool explicit_header = true;
    bool uplink_crc = true;
    bool downlink_crc = false;
    LdroMode ldro = LdroMode::automatic;
    int payload_bytes = 51;       // uplink data frame PHY payload
    int ack_payload_bytes = 0;    // ACKs carry no application payload

    void validate() const;
    bool operator==(const PhyConfig&) const = default;
};

inline constexpr int kMinSpreadingFactor = 7;
inline constexpr int kMaxSpreadingFactor = 12;
inline constexpr int kMaxPayloadBytes = 255;
inline constexpr int kMaxMcsCount = 6;

/// Time on air in seconds of one LoRa frame.
double airtime(int spreading_factor, int payload_bytes, const PhyConfig& phy,
               LinkDirection direction = LinkDirection::uplink);

struct McsParams {
    int index = 0;
    int spreading_factor = 12;
    double t_data = 0.0;
    double t_ack = 0.0;

    bool operator==(const McsParams&) const = default;
};

/// MCS ladder, index 0 being the slowest (SF12).
class McsTable {
public:
    McsTable() = default;
    explicit McsTable(std::vector<McsParams> entries);

    std::size_t size() const { return entries_.size(); }
    const McsParams& operator[](std::size_t i) const { return entries_.at(i); }
    const McsParams& slowest() const { return entries_.front(); }
    const std::vector<McsParams>& entries() const { return entries_; }

    Eigen::VectorXd data_durations() const;
    Eigen::VectorXd ack_durations() const;

    bool operator==(const McsTable&) const = default;

private:
    std::vector<McsParams> entries_;
};

/// SF = 12 - index for index in [0, mcs_count).
McsTable build_mcs_table(const PhyConfig& phy, int payload_bytes, int mcs_count);
inline McsTable build_mcs_table(const PhyConfig& phy, int mcs_count) {
    return build_mcs_table(phy, phy.payload_bytes, mcs_count);
}

struct RadioTiming {
    double t1 = 1.0;
    double t2 = 2.0;
    int delta_m = 0;
    double retry_delay_min = 1.0;
    double retry_delay_max = 3.0;

    void validate(int mcs_count) const;
    bool operator==(const RadioTiming&) const = default;
};

}  // namespace loraplan
