#pragma once

// Event-driven simulation of class A motes around a single gateway.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "loraplan/scenario.hpp"

namespace loraplan {

struct Position {
    double x = 0.0;
    double y = 0.0;

    double norm() const;
    bool operator==(const Position&) const = default;
};

struct MoteSpec {
    int group = 0;
    std::optional<int> mcs;
    std::optional<Position> position;  // drawn uniformly in the disc when empty
};

/// Capture rule at a receiver: a signal of power a survives a rival of power b
/// only with a margin of at least q dB. Never true when q is infinite.
bool dominates(double a_dbm, double b_dbm, double q_db);

/// One mote per allocated slot, ordered by group and then by MCS.
std::vector<MoteSpec> motes_from_counts(const CountMatrix& counts);

struct SimConfig {
    Scenario scenario;
    std::vector<MoteSpec> motes;
    double duration = 0.0;  // arrivals stop here, in-flight frames drain afterwards
    std::uint64_t seed = 1;
    int bins = 30;

    /// Throws ValidationError on a bad duration, a mote without an MCS or a
    /// position outside the disc.
    void validate() const;
};

SimConfig make_sim_config(const Scenario& scenario, const CountMatrix& counts, double duration,
                          std::uint64_t seed);

struct MoteStats {
    int id = 0;
    int group = 0;
    int mcs = 0;
    Position position;
    double distance = 0.0;

    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    std::int64_t discarded = 0;  // superseded by a newer frame
    std::int64_t dropped = 0;    // retry limit exhausted
    std::int64_t retransmissions = 0;

    std::int64_t first_attempts = 0;
    std::int64_t first_data_ok = 0;  // first attempt received by the gateway
    std::int64_t first_ack_ok = 0;   // ... and acknowledged

    double plr() const;
    bool operator==(const MoteStats&) const = default;
};

struct DistanceBin {
    double center = 0.0;
    std::int64_t motes = 0;
    std::int64_t generated = 0;
    std::int64_t lost = 0;
    double plr = 0.0;  // NaN when no frame was generated in the bin
    double ci_low = 0.0;
    double ci_high = 0.0;

    bool operator==(const DistanceBin&) const = default;
};

struct SimCounters {
    std::int64_t events = 0;
    std::int64_t uplinks = 0;
    std::int64_t ack1_sent = 0;
    std::int64_t ack1_skipped = 0;
    std::int64_t ack2_sent = 0;
    std::int64_t ack2_skipped = 0;

    bool operator==(const SimCounters&) const = default;
};

struct SimStats {
    std::uint64_t seed = 0;
    std::vector<MoteStats> motes;
    SimCounters counters;

    std::int64_t generated() const;
    std::int64_t delivered() const;
    std::int64_t lost() const { return generated() - delivered(); }

    bool operator==(const SimStats&) const = default;
};

/// Exact (Clopper-Pearson) confidence interval for a binomial proportion.
std::pair<double, double> binomial_interval(std::int64_t successes, std::int64_t trials,
                                            double level = 0.95);

/// Motes pooled into equal-width distance bins over [0, radius]. Optional
/// filters restrict to one MCS and/or one group.
std::vector<DistanceBin> bin_by_distance(const std::vector<MoteStats>& motes, double radius,
                                         int bins, std::optional<int> mcs = std::nullopt,
                                         std::optional<int> group = std::nullopt);

SimStats run(const SimConfig& config);

struct ReplicatedStats {
    std::vector<std::uint64_t> seeds;
    std::vector<SimStats> runs;
    std::vector<DistanceBin> bins;  // pooled over all runs

    std::int64_t generated() const;
    std::int64_t delivered() const;
};

/// Independent replications, one per seed, run concurrently. Seeds must be
/// distinct and at least two.
ReplicatedStats replicate(const SimConfig& config, const std::vector<std::uint64_t>& seeds,
                          std::optional<int> mcs = std::nullopt,
                          std::optional<int> group = std::nullopt);

/// `n_seeds` seeds derived from config.seed.
ReplicatedStats replicate(const SimConfig& config, int n_seeds,
                          std::optional<int> mcs = std::nullopt,
                          std::optional<int> group = std::nullopt);

std::vector<std::uint64_t> derive_seeds(std::uint64_t base, int n);

}  // namespace loraplan
