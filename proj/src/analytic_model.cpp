#include "loraplan/analytic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "loraplan/errors.hpp"

namespace loraplan {

KernelGrid make_kernel_grid(const PathLossParams<double>& params, int grid_points) {
    if (grid_points < 2) throw std::invalid_argument("make_kernel_grid: need at least 2 points");
    params.validate();
    const double radius = params.radius;

    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(grid_points) + 1);
    for (int k = 0; k < grid_points; ++k)
        xs.push_back(radius * static_cast<double>(k) / static_cast<double>(grid_points - 1));
    const double horizon = params.capture_horizon();
    if (horizon > 0.0 && horizon < radius) {
        auto it = std::lower_bound(xs.begin(), xs.end(), horizon);
        if (it == xs.end() || *it != horizon) xs.insert(it, horizon);
    }

    KernelGrid grid;
    const auto n = static_cast<Eigen::Index>(xs.size());
    grid.x = Eigen::Map<Eigen::VectorXd>(xs.data(), n);
    grid.v_gw.resize(n);
    grid.v_both.resize(n);
    grid.v_one.resize(n);
    grid.v_mote.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto o = capture_outcome(grid.x[k], params);
        grid.v_gw[k] = o.v_gw;
        grid.v_both[k] = o.v_both;
        grid.v_one[k] = o.v_one;
        grid.v_mote[k] = ack_capture_prob(grid.x[k], params);
    }
    return grid;
}

double p_no_new_frame(const GroupSpec& group, double attempt_span, bool is_retry,
                      const RadioTiming& timing) {
    if (!(attempt_span > 0.0)) throw std::invalid_argument("p_no_new_frame: attempt span must be positive");
    const double lambda = group.rate_per_mote;
    const double first = std::exp(-lambda * attempt_span);
    if (!is_retry) return first;
    const double width = timing.retry_delay_max - timing.retry_delay_min;
    const double y = lambda * width;
    // E[exp(-lambda D)] for D uniform on [min, max]
    const double spread = y > 0.0 ? -std::expm1(-y) / y : 1.0;
    return first * std::exp(-lambda * timing.retry_delay_min) * spread;
}

double retry_overlap_probability(double airtime, double delay_min, double delay_max) {
    if (!(airtime >= 0.0)) throw std::invalid_argument("retry_overlap_probability: negative airtime");
    const double width = delay_max - delay_min;
    if (!(width > 0.0) || airtime >= width) return 1.0;
    const double s = 1.0 - airtime / width;
    return 1.0 - s * s;
}

LinkTerms link_terms(int mcs, const GroupSpec& group, const LoadVector& loads,
                     const Scenario& scenario) {
    const int m_count = scenario.mcs_count;
    if (mcs < 0 || mcs >= m_count) throw std::out_of_range("MCS index out of range");
    if (loads.mcs_count() != m_count) throw std::invalid_argument("load vector size mismatch");

    const double lambda = group.rate_per_mote;
    const double channels = static_cast<double>(scenario.main_channels);
    const auto& table = scenario.mcs_table;
    const int delta = scenario.timing.delta_m;

    // everyone else's offered load per MCS
    auto competing = [&](int j) {
        return std::max(0.0, loads.load(j) - (j == mcs ? lambda : 0.0));
    };

    LinkTerms t;
    t.channel_load = competing(mcs) / channels;
    t.t_data = table[static_cast<std::size_t>(mcs)].t_data;
    t.t_ack = table[static_cast<std::size_t>(mcs)].t_ack;
    t.ideal_ack = scenario.model.ideal_ack;

    const int ack_mcs = std::max(0, mcs - delta);
    const double ack_load = competing(ack_mcs) / channels;
    const double ack1_duration = table[static_cast<std::size_t>(ack_mcs)].t_ack;

    // first-window ACKs share a transmitter per (channel, ACK MCS)
    double ack1_busy = 0.0;
    double ack2_busy = loads.background_load() * table.slowest().t_ack;
    for (int j = 0; j < m_count; ++j) {
        if (std::max(0, j - delta) == ack_mcs) ack1_busy += competing(j) / channels * ack1_duration;
        ack2_busy += competing(j) * table.slowest().t_ack;
    }
    t.ack1_channel_free = std::exp(-ack1_busy);
    t.ack1_no_uplink = std::exp(-ack_load * table[static_cast<std::size_t>(ack_mcs)].t_data);
    t.ack1_interferers = ack_load * ack1_duration;
    t.ack2_success = std::exp(-ack2_busy);

    t.no_new_frame = scenario.model.frame_discard
                         ? p_no_new_frame(group, scenario.attempt_span(mcs), true, scenario.timing)
                         : 1.0;
    t.recollision = retry_overlap_probability(t.t_data, scenario.timing.retry_delay_min,
                                              scenario.timing.retry_delay_max) /
                    channels;
    return t;
}

namespace {

double data_map(double p, double load, double t_data, double t_ack, double v_gw) {
    const double a = 2.0 * load * t_data;
    return std::exp(-(2.0 * t_data + p * t_ack) * load) + a * std::exp(-a) * v_gw;
}

}  // namespace

double solve_data_success_bisection(double channel_load, double t_data, double t_ack,
                                    double v_gw) {
    // g(P) = P - f(P) is increasing since f is decreasing in P
    double lo = 0.0;
    double hi = 1.0;
    if (hi - data_map(hi, channel_load, t_data, t_ack, v_gw) <= 0.0) return 1.0;
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (mid - data_map(mid, channel_load, t_data, t_ack, v_gw) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

FixedPointResult solve_data_success(double channel_load, double t_data, double t_ack,
                                    double v_gw) {
    constexpr double kRelTol = 1e-12;
    constexpr int kMaxIter = 10000;
    FixedPointResult r;
    if (channel_load <= 0.0) return r;

    double p = 1.0;
    double damping = 1.0;
    double prev_step = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= kMaxIter; ++it) {
        const double next = (1.0 - damping) * p + damping * data_map(p, channel_load, t_data, t_ack, v_gw);
        const double step = std::abs(next - p);
        p = next;
        r.iterations = it;
        if (step <= kRelTol * std::abs(p)) {
            r.value = std::clamp(p, 0.0, 1.0);
            return r;
        }
        if (step >= prev_step) damping *= 0.5;  // oscillating: damp harder
        prev_step = step;
    }
    r.value = solve_data_success_bisection(channel_load, t_data, t_ack, v_gw);
    r.used_bisection = true;
    return r;
}

AttemptProbabilities attempt_probabilities(const LinkTerms& t, int retry_limit,
                                           const CaptureOutcome<double>& outcome,
                                           double v_mote) {
    AttemptProbabilities p;
    p.data = solve_data_success(t.channel_load, t.t_data, t.t_ack, outcome.v_gw).value;

    if (t.ideal_ack) {
        p.ack = 1.0;
    } else {
        const double b = t.ack1_interferers;
        const double clear = std::exp(-b) * (1.0 + b * v_mote);
        const double ack1 = t.ack1_channel_free * t.ack1_no_uplink * clear;
        p.ack = 1.0 - (1.0 - ack1) * (1.0 - t.ack2_success);
    }
    p.first = p.data * p.ack;

    // share of first-attempt failures that were mutual-loss collisions
    const double fail = 1.0 - p.first;
    const double a = 2.0 * t.channel_load * t.t_data;
    const double both_fail = a * std::exp(-a) * outcome.v_both;
    const double w_both = fail > 0.0 ? std::min(1.0, both_fail / fail) : 0.0;
    p.retry = p.first * (1.0 - w_both * t.recollision);

    const double g = t.no_new_frame;
    const double q = g * (1.0 - p.retry);
    double series = 0.0;
    double term = 1.0;
    for (int r = 0; r < retry_limit; ++r) {
        series += term;
        term *= q;
    }
    const double recovered = g * series * p.retry;
    p.plr = std::clamp(fail * (1.0 - recovered), 0.0, 1.0);
    return p;
}

namespace {

AttemptProbabilities probabilities_at(double x, int mcs, const GroupSpec& group,
                                      const LoadVector& loads, const Scenario& scenario) {
    const auto terms = link_terms(mcs, group, loads, scenario);
    const auto outcome = capture_outcome(x, scenario.path_loss);
    const double v_mote = ack_capture_prob(x, scenario.path_loss);
    return attempt_probabilities(terms, scenario.retry_limit, outcome, v_mote);
}

}  // namespace

double p_data_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                      const Scenario& scenario) {
    const auto terms = link_terms(mcs, group, loads, scenario);
    const auto outcome = capture_outcome(x, scenario.path_loss);
    return solve_data_success(terms.channel_load, terms.t_data, terms.t_ack, outcome.v_gw).value;
}

double p_ack_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                     const Scenario& scenario) {
    return probabilities_at(x, mcs, group, loads, scenario).ack;
}

double p_first_attempt_success(double x, int mcs, const GroupSpec& group,
                               const LoadVector& loads, const Scenario& scenario) {
    return probabilities_at(x, mcs, group, loads, scenario).first;
}

double p_retry_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario, PriorOutcome prior) {
    const auto terms = link_terms(mcs, group, loads, scenario);
    const auto outcome = capture_outcome(x, scenario.path_loss);
    const double v_mote = ack_capture_prob(x, scenario.path_loss);
    const auto p = attempt_probabilities(terms, scenario.retry_limit, outcome, v_mote);
    switch (prior) {
        case PriorOutcome::both_lost: return p.first * (1.0 - terms.recollision);
        case PriorOutcome::interferer_won: return p.first;
        case PriorOutcome::unconditional: return p.retry;
    }
    return p.retry;
}

double plr_at(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
              const Scenario& scenario) {
    return probabilities_at(x, mcs, group, loads, scenario).plr;
}

PlrProfile::PlrProfile(Eigen::VectorXd x, Eigen::VectorXd plr, double radius)
    : x_(std::move(x)), plr_(std::move(plr)), radius_(radius) {
    if (x_.size() < 2 || x_.size() != plr_.size())
        throw std::invalid_argument("PlrProfile: need matching x/plr samples");
    if (x_[0] != 0.0 || x_[x_.size() - 1] != radius_)
        throw std::invalid_argument("PlrProfile: samples must span [0, R]");
    max_ = plr_.maxCoeff(&argmax_);

    average_ = std::clamp(average_over(0.0, radius_), 0.0, max_);
}

double PlrProfile::interpolate(double x) const {
    if (!(x >= 0.0) || x > radius_) throw std::domain_error("PlrProfile: x outside [0, R]");
    const auto* first = x_.data();
    const auto* last = x_.data() + x_.size();
    const auto* it = std::upper_bound(first, last, x);
    if (it == last) return plr_[x_.size() - 1];
    const auto k = static_cast<Eigen::Index>(it - first) - 1;
    const double t = (x - x_[k]) / (x_[k + 1] - x_[k]);
    return plr_[k] + t * (plr_[k + 1] - plr_[k]);
}

double PlrProfile::average_over(double a, double b) const {
    a = std::clamp(a, 0.0, radius_);
    b = std::clamp(b, 0.0, radius_);
    if (!(b > a)) throw std::invalid_argument("PlrProfile::average_over: empty interval");
    // integral of plr(r) * r over [a, b], exact for the piecewise-linear curve
    double acc = 0.0;
    for (Eigen::Index k = 0; k + 1 < x_.size(); ++k) {
        const double lo = std::max(a, x_[k]);
        const double hi = std::min(b, x_[k + 1]);
        if (!(hi > lo)) continue;
        const double slope = (plr_[k + 1] - plr_[k]) / (x_[k + 1] - x_[k]);
        const double intercept = plr_[k] - slope * x_[k];
        acc += intercept * (hi * hi - lo * lo) / 2.0 + slope * (hi * hi * hi - lo * lo * lo) / 3.0;
    }
    return acc / ((b * b - a * a) / 2.0);
}

double PlrProfile::cdf(double y) const {
    // exact at the ends, where summing segment masses could leave a rounding residue
    if (y > max_) return 1.0;
    if (y <= plr_.minCoeff()) return 0.0;
    double mass = 0.0;
    for (Eigen::Index k = 0; k + 1 < x_.size(); ++k) {
        const double r0 = x_[k];
        const double r1 = x_[k + 1];
        const double p0 = plr_[k];
        const double p1 = plr_[k + 1];
        const bool b0 = p0 < y;
        const bool b1 = p1 < y;
        const double r2 = radius_ * radius_;
        if (b0 && b1) {
            mass += (r1 * r1 - r0 * r0) / r2;
        } else if (b0 != b1) {
            // clamped so rounding cannot push the crossing outside the segment
            // Crossing measured from the endpoint below y, and masses as differences
            // of squares, so each term stays monotone in y after rounding.
            if (b0) {
                const double rc = std::clamp(r0 + (y - p0) / (p1 - p0) * (r1 - r0), r0, r1);
                mass += (rc * rc - r0 * r0) / r2;
            } else {
                const double rc = std::clamp(r1 - (y - p1) / (p0 - p1) * (r1 - r0), r0, r1);
                mass += (r1 * r1 - rc * rc) / r2;
            }
        }
    }
    return std::clamp(mass, 0.0, 1.0);
}

double PlrProfile::cdf_inclusive(double y) const {
    return cdf(std::nextafter(y, std::numeric_limits<double>::infinity()));
}

double PlrProfile::percentile(double p) const {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile: p must be in (0, 1]");
    double lo = min_plr();
    double hi = max_;
    if (cdf_inclusive(lo) >= p) return lo;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (cdf_inclusive(mid) >= p)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double PlrProfile::mass_near_max(double fraction) const {
    return 1.0 - cdf(fraction * max_);
}

std::vector<std::pair<double, double>> PlrProfile::cdf_curve(int points) const {
    if (points < 2) throw std::invalid_argument("cdf_curve: need at least 2 points");
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(points) + 1);
    const double lo = min_plr();
    for (int k = 0; k < points; ++k) {
        const double y = lo + (max_ - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
        out.emplace_back(y, cdf(y));
    }
    const double above = std::nextafter(max_, std::numeric_limits<double>::infinity());
    out.emplace_back(above, cdf(above));
    return out;
}

PlrProfile plr_profile(int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario, const KernelGrid& kernels) {
    const auto terms = link_terms(mcs, group, loads, scenario);
    Eigen::VectorXd plr(kernels.size());
    for (Eigen::Index k = 0; k < kernels.size(); ++k) {
        const CaptureOutcome<double> o{kernels.v_gw[k], kernels.v_both[k], kernels.v_one[k]};
        plr[k] = attempt_probabilities(terms, scenario.retry_limit, o, kernels.v_mote[k]).plr;
    }
    return PlrProfile(kernels.x, std::move(plr), scenario.path_loss.radius);
}

PlrProfile plr_profile(int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario, int grid_points) {
    if (grid_points < 64) throw std::invalid_argument("plr_profile: grid_points must be >= 64");
    return plr_profile(mcs, group, loads, scenario, make_kernel_grid(scenario.path_loss, grid_points));
}

double average_plr(int mcs, const GroupSpec& group, const LoadVector& loads,
                   const Scenario& scenario) {
    return plr_profile(mcs, group, loads, scenario, scenario.model.grid_points).average_plr();
}

}  // namespace loraplan
