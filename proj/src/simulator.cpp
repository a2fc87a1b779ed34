#include "loraplan/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "loraplan/errors.hpp"

namespace loraplan {

double Position::norm() const { return std::hypot(x, y); }

double MoteStats::plr() const {
    if (generated == 0) return 0.0;
    return 1.0 - static_cast<double>(delivered) / static_cast<double>(generated);
}

std::int64_t SimStats::generated() const {
    std::int64_t n = 0;
    for (const auto& m : motes) n += m.generated;
    return n;
}

std::int64_t SimStats::delivered() const {
    std::int64_t n = 0;
    for (const auto& m : motes) n += m.delivered;
    return n;
}

std::int64_t ReplicatedStats::generated() const {
    std::int64_t n = 0;
    for (const auto& r : runs) n += r.generated();
    return n;
}

std::int64_t ReplicatedStats::delivered() const {
    std::int64_t n = 0;
    for (const auto& r : runs) n += r.delivered();
    return n;
}

bool dominates(double a_dbm, double b_dbm, double q_db) {
    if (std::isinf(q_db)) return false;
    if (std::isinf(a_dbm) && std::isinf(b_dbm)) return false;
    return a_dbm - b_dbm >= q_db && a_dbm > b_dbm;
}

std::vector<MoteSpec> motes_from_counts(const CountMatrix& counts) {
    std::vector<MoteSpec> motes;
    for (Eigen::Index g = 0; g < counts.cols(); ++g)
        for (Eigen::Index i = 0; i < counts.rows(); ++i)
            for (std::int64_t k = 0; k < counts(i, g); ++k)
                motes.push_back({static_cast<int>(g), static_cast<int>(i), std::nullopt});
    return motes;
}

void SimConfig::validate() const {
    scenario.validate();
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw ValidationError("simulation.duration", "must be positive and finite");
    if (bins < 1) throw ValidationError("simulation.bins", "must be at least 1");
    const auto n_groups = static_cast<int>(scenario.groups.size());
    for (std::size_t k = 0; k < motes.size(); ++k) {
        const auto& m = motes[k];
        const std::string field = "motes[" + std::to_string(k) + "]";
        if (m.group < 0 || m.group >= n_groups) throw ValidationError(field + ".group", "no such group");
        if (!m.mcs) throw ValidationError(field + ".mcs", "mote has no MCS");
        if (*m.mcs < 0 || *m.mcs >= scenario.mcs_count)
            throw ValidationError(field + ".mcs", "outside 0.." + std::to_string(scenario.mcs_count - 1));
        if (m.position && !(m.position->norm() <= scenario.path_loss.radius))
            throw ValidationError(field + ".position", "outside the cell radius");
    }
}

SimConfig make_sim_config(const Scenario& scenario, const CountMatrix& counts, double duration,
                          std::uint64_t seed) {
    SimConfig c;
    c.scenario = scenario;
    c.motes = motes_from_counts(counts);
    c.duration = duration;
    c.seed = seed;
    return c;
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

enum class EventType { uplink_end, ack1_end, ack2_end, close, ack1_start, ack2_start, retry, arrival };

// Tie-break at equal times: ends before starts, acknowledgement ends before
// the attempt that waits for them closes.
int rank(EventType t) {
    switch (t) {
        case EventType::uplink_end: return 0;
        case EventType::ack1_end:
        case EventType::ack2_end: return 1;
        case EventType::close: return 2;
        case EventType::ack1_start:
        case EventType::ack2_start: return 3;
        case EventType::retry: return 4;
        case EventType::arrival: return 5;
    }
    return 6;
}

struct Event {
    double time;
    int rank;
    std::uint64_t seq;
    EventType type;
    int subject;  // mote, uplink or downlink slot depending on type
    std::uint64_t token;

    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (rank != o.rank) return rank > o.rank;
        return seq > o.seq;
    }
};

struct Uplink {
    int mote;
    int channel;
    int mcs;
    double end;
    double power;     // at the gateway, dBm
    bool doomed = false;   // lost to a rival without a Q dB margin
    bool blocked = false;  // started while the gateway was transmitting on it
};

struct Downlink {
    int uplink = -1;  // being acknowledged; -1 when idle
    int mcs = 0;
    bool corrupted = false;
};

enum class MoteState { idle, in_attempt, backoff };

struct Mote {
    int mcs = 0;
    Position pos;
    double power_at_gw = 0.0;  // also the gateway's power at the mote
    double rate = 0.0;
    std::mt19937_64 arrivals;
    std::mt19937_64 access;

    MoteState state = MoteState::idle;
    int attempt = 0;  // 0 for the first transmission of the current frame
    bool pending = false;
    int uplink = -1;
    bool acked = false;
    std::uint64_t token = 0;
};

class Simulation {
public:
    explicit Simulation(const SimConfig& config) : cfg_(config), sc_(config.scenario) {
        const auto& pl = sc_.path_loss;
        channels_ = sc_.main_channels;
        radius_ = pl.radius;
        on_air_.assign(static_cast<std::size_t>(channels_ * sc_.mcs_count), {});
        ack1_.assign(static_cast<std::size_t>(channels_ * sc_.mcs_count), Downlink{});

        auto placement = stream(cfg_.seed, 0xd15c, 0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        stats_.seed = cfg_.seed;
        stats_.motes.resize(cfg_.motes.size());
        motes_.resize(cfg_.motes.size());
        for (std::size_t k = 0; k < cfg_.motes.size(); ++k) {
            const auto& spec = cfg_.motes[k];
            Position p;
            if (spec.position) {
                p = *spec.position;
            } else {
                const double r = radius_ * std::sqrt(unit(placement));
                const double phi = 2.0 * std::numbers::pi * unit(placement);
                p = {r * std::cos(phi), r * std::sin(phi)};
            }
            auto& m = motes_[k];
            m.mcs = *spec.mcs;
            m.pos = p;
            m.power_at_gw = power_over(p.norm());
            m.rate = sc_.groups[static_cast<std::size_t>(spec.group)].rate_per_mote;
            m.arrivals = stream(cfg_.seed, k, 1);
            m.access = stream(cfg_.seed, k, 2);

            auto& s = stats_.motes[k];
            s.id = static_cast<int>(k);
            s.group = spec.group;
            s.mcs = m.mcs;
            s.position = p;
            s.distance = p.norm();
        }
    }

    SimStats run() {
        for (std::size_t k = 0; k < motes_.size(); ++k) schedule_arrival(static_cast<int>(k), 0.0);
        while (!queue_.empty()) {
            const Event e = queue_.top();
            queue_.pop();
            ++stats_.counters.events;
            dispatch(e);
        }
        return std::move(stats_);
    }

private:
    double power_over(double distance) const {
        // a receiver sitting on the transmitter gets unbounded power
        if (!(distance > 0.0)) return std::numeric_limits<double>::infinity();
        return path_loss(distance, sc_.path_loss);
    }

    bool dominates(double a, double b) const { return loraplan::dominates(a, b, sc_.path_loss.q); }

    std::vector<int>& on_air(int channel, int mcs) {
        return on_air_[static_cast<std::size_t>(channel * sc_.mcs_count + mcs)];
    }

    Downlink& ack1(int channel, int mcs) {
        return ack1_[static_cast<std::size_t>(channel * sc_.mcs_count + mcs)];
    }

    void push(double t, EventType type, int subject, std::uint64_t token = 0) {
        queue_.push(Event{t, rank(type), seq_++, type, subject, token});
    }

    void schedule_arrival(int k, double now) {
        auto& m = motes_[static_cast<std::size_t>(k)];
        if (!(m.rate > 0.0)) return;
        std::exponential_distribution<double> gap(m.rate);
        const double t = now + gap(m.arrivals);
        if (t <= cfg_.duration) push(t, EventType::arrival, k);
    }

    void dispatch(const Event& e) {
        switch (e.type) {
            case EventType::arrival: on_arrival(e.subject, e.time); break;
            case EventType::retry: on_retry(e.subject, e.time, e.token); break;
            case EventType::uplink_end: on_uplink_end(e.subject, e.time); break;
            case EventType::ack1_start: on_ack1_start(e.subject, e.time); break;
            case EventType::ack1_end: on_ack1_end(e.subject); break;
            case EventType::ack2_start: on_ack2_start(e.subject, e.time); break;
            case EventType::ack2_end: on_ack2_end(); break;
            case EventType::close: on_close(e.subject, e.time); break;
        }
    }

    void on_arrival(int k, double t) {
        auto& m = motes_[static_cast<std::size_t>(k)];
        auto& s = stats_.motes[static_cast<std::size_t>(k)];
        ++s.generated;
        schedule_arrival(k, t);
        switch (m.state) {
            case MoteState::idle:
                m.attempt = 0;
                transmit(k, t);
                break;
            case MoteState::in_attempt:
                if (m.pending) ++s.discarded;  // the waiting frame is superseded
                m.pending = true;
                break;
            case MoteState::backoff:
                ++s.discarded;
                ++m.token;  // cancel the scheduled retry
                m.attempt = 0;
                transmit(k, t);
                break;
        }
    }

    void on_retry(int k, double t, std::uint64_t token) {
        auto& m = motes_[static_cast<std::size_t>(k)];
        if (token != m.token || m.state != MoteState::backoff) return;
        ++stats_.motes[static_cast<std::size_t>(k)].retransmissions;
        transmit(k, t);
    }

    void transmit(int k, double t) {
        auto& m = motes_[static_cast<std::size_t>(k)];
        auto& s = stats_.motes[static_cast<std::size_t>(k)];
        std::uniform_int_distribution<int> pick(0, channels_ - 1);
        const int channel = pick(m.access);
        const auto& entry = sc_.mcs_table[static_cast<std::size_t>(m.mcs)];

        Uplink u{k, channel, m.mcs, t + entry.t_data, m.power_at_gw};
        const int id = static_cast<int>(uplinks_.size());
        for (const int other : on_air(channel, m.mcs)) {
            auto& o = uplinks_[static_cast<std::size_t>(other)];
            if (!dominates(u.power, o.power)) u.doomed = true;
            if (!dominates(o.power, u.power)) o.doomed = true;
        }
        auto& dl = ack1(channel, m.mcs);
        if (dl.uplink >= 0) {
            u.blocked = true;
            // the acknowledged mote hears this uplink on top of the gateway
            const auto& target = motes_[static_cast<std::size_t>(uplinks_[static_cast<std::size_t>(dl.uplink)].mote)];
            const double rival = power_over(std::hypot(target.pos.x - m.pos.x, target.pos.y - m.pos.y));
            if (!dominates(target.power_at_gw, rival)) dl.corrupted = true;
        }
        uplinks_.push_back(u);
        on_air(channel, m.mcs).push_back(id);
        ++stats_.counters.uplinks;

        m.state = MoteState::in_attempt;
        m.uplink = id;
        m.acked = false;
        if (m.attempt == 0) ++s.first_attempts;

        push(u.end, EventType::uplink_end, id);
        const double close = (u.end + sc_.timing.t2) + sc_.mcs_table.slowest().t_ack;
        push(close, EventType::close, k);
    }

    void on_uplink_end(int id, double t) {
        auto& u = uplinks_[static_cast<std::size_t>(id)];
        auto& list = on_air(u.channel, u.mcs);
        list.erase(std::find(list.begin(), list.end(), id));
        if (u.doomed || u.blocked) return;
        auto& m = motes_[static_cast<std::size_t>(u.mote)];
        if (m.attempt == 0) ++stats_.motes[static_cast<std::size_t>(u.mote)].first_data_ok;
        push(t + sc_.timing.t1, EventType::ack1_start, id);
        push(t + sc_.timing.t2, EventType::ack2_start, id);
    }

    void on_ack1_start(int id, double t) {
        const auto& u = uplinks_[static_cast<std::size_t>(id)];
        const int ack_mcs = std::max(0, u.mcs - sc_.timing.delta_m);
        auto& dl = ack1(u.channel, ack_mcs);
        if (dl.uplink >= 0 || !on_air(u.channel, ack_mcs).empty()) {
            ++stats_.counters.ack1_skipped;
            return;
        }
        dl = Downlink{id, ack_mcs, false};
        ++stats_.counters.ack1_sent;
        push(t + sc_.mcs_table[static_cast<std::size_t>(ack_mcs)].t_ack, EventType::ack1_end,
             u.channel * sc_.mcs_count + ack_mcs);
    }

    void on_ack1_end(int slot) {
        auto& dl = ack1_[static_cast<std::size_t>(slot)];
        if (!dl.corrupted) acknowledge(dl.uplink);
        dl = Downlink{};
    }

    void on_ack2_start(int id, double t) {
        if (ack2_.uplink >= 0) {
            ++stats_.counters.ack2_skipped;
            return;
        }
        ack2_ = Downlink{id, 0, false};
        ++stats_.counters.ack2_sent;
        push(t + sc_.mcs_table.slowest().t_ack, EventType::ack2_end, 0);
    }

    void on_ack2_end() {
        acknowledge(ack2_.uplink);
        ack2_ = Downlink{};
    }

    void acknowledge(int id) {
        const auto& u = uplinks_[static_cast<std::size_t>(id)];
        auto& m = motes_[static_cast<std::size_t>(u.mote)];
        if (m.uplink == id && m.state == MoteState::in_attempt) m.acked = true;
    }

    void on_close(int k, double t) {
        auto& m = motes_[static_cast<std::size_t>(k)];
        auto& s = stats_.motes[static_cast<std::size_t>(k)];
        if (m.acked) {
            ++s.delivered;
            if (m.attempt == 0) ++s.first_ack_ok;
        } else if (m.pending) {
            ++s.discarded;
        } else if (m.attempt < sc_.retry_limit) {
            ++m.attempt;
            m.state = MoteState::backoff;
            std::uniform_real_distribution<double> delay(sc_.timing.retry_delay_min,
                                                         sc_.timing.retry_delay_max);
            push(t + delay(m.access), EventType::retry, k, ++m.token);
            return;
        } else {
            ++s.dropped;
        }
        m.uplink = -1;
        m.acked = false;
        if (m.pending) {
            m.pending = false;
            m.attempt = 0;
            transmit(k, t);
        } else {
            m.state = MoteState::idle;
        }
    }

    const SimConfig& cfg_;
    const Scenario& sc_;
    int channels_ = 1;
    double radius_ = 0.0;

    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    std::vector<Mote> motes_;
    std::vector<Uplink> uplinks_;
    std::vector<std::vector<int>> on_air_;  // (channel, mcs) -> uplinks on air
    std::vector<Downlink> ack1_;            // (channel, ACK MCS) -> first-window ACK
    Downlink ack2_;                         // service channel
    SimStats stats_;
};

}  // namespace

SimStats run(const SimConfig& config) {
    config.validate();
    return Simulation(config).run();
}

std::pair<double, double> binomial_interval(std::int64_t successes, std::int64_t trials, double level) {
    if (trials <= 0) return {0.0, 1.0};
    if (successes < 0 || successes > trials) throw std::invalid_argument("binomial_interval: successes outside [0, trials]");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("binomial_interval: level must be in (0, 1)");
    using boost::math::binomial_distribution;
    const double alpha = (1.0 - level) / 2.0;
    const auto n = static_cast<double>(trials);
    const auto k = static_cast<double>(successes);
    return {binomial_distribution<>::find_lower_bound_on_p(n, k, alpha),
            binomial_distribution<>::find_upper_bound_on_p(n, k, alpha)};
}

std::vector<DistanceBin> bin_by_distance(const std::vector<MoteStats>& motes, double radius,
                                         int bins, std::optional<int> mcs,
                                         std::optional<int> group) {
    if (bins < 1) throw std::invalid_argument("bin_by_distance: need at least one bin");
    if (!(radius > 0.0)) throw std::invalid_argument("bin_by_distance: radius must be positive");
    std::vector<DistanceBin> out(static_cast<std::size_t>(bins));
    const double width = radius / bins;
    for (int b = 0; b < bins; ++b) out[static_cast<std::size_t>(b)].center = (b + 0.5) * width;
    for (const auto& m : motes) {
        if (mcs && m.mcs != *mcs) continue;
        if (group && m.group != *group) continue;
        const int b = std::clamp(static_cast<int>(m.distance / width), 0, bins - 1);
        auto& bin = out[static_cast<std::size_t>(b)];
        ++bin.motes;
        bin.generated += m.generated;
        bin.lost += m.generated - m.delivered;
    }
    for (auto& bin : out) {
        if (bin.generated == 0) {
            bin.plr = std::numeric_limits<double>::quiet_NaN();
            bin.ci_low = 0.0;
            bin.ci_high = 1.0;
            continue;
        }
        bin.plr = static_cast<double>(bin.lost) / static_cast<double>(bin.generated);
        std::tie(bin.ci_low, bin.ci_high) = binomial_interval(bin.lost, bin.generated);
    }
    return out;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t base, int n) {
    if (n < 0) throw std::invalid_argument("derive_seeds: negative count");
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32), 0x5eedu};
    std::vector<std::uint32_t> words(static_cast<std::size_t>(2 * n));
    seq.generate(words.begin(), words.end());
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seeds[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
    return seeds;
}

ReplicatedStats replicate(const SimConfig& config, const std::vector<std::uint64_t>& seeds,
                          std::optional<int> mcs, std::optional<int> group) {
    if (seeds.size() < 2) throw std::invalid_argument("replicate: need at least two seeds");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw std::invalid_argument("replicate: seeds must be distinct");
    config.validate();

    ReplicatedStats out;
    out.seeds = seeds;
    out.runs.resize(seeds.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
            try {
                SimConfig c = config;
                c.seed = seeds[i];
                out.runs[i] = Simulation(c).run();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto n_threads = std::min<std::size_t>(hw, seeds.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<MoteStats> pooled;
    for (const auto& r : out.runs) pooled.insert(pooled.end(), r.motes.begin(), r.motes.end());
    out.bins = bin_by_distance(pooled, config.scenario.path_loss.radius, config.bins, mcs, group);
    return out;
}

ReplicatedStats replicate(const SimConfig& config, int n_seeds, std::optional<int> mcs,
                          std::optional<int> group) {
    if (n_seeds < 2) throw std::invalid_argument("replicate: need at least two seeds");
    return replicate(config, derive_seeds(config.seed, n_seeds), mcs, group);
}

}  // namespace loraplan
