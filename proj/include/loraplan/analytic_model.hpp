#pragma once

// Position-dependent PLR of a tagged mote: data-frame fixed point, two-window
// ACK delivery, retransmission chain and the PLR distribution over the disc.

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "loraplan/geometry.hpp"
#include "loraplan/scenario.hpp"

namespace loraplan {

/// Capture kernels sampled on a distance grid over [0, R]. The grid is uniform
/// with `grid_points` samples plus the capture horizon R*10^(-Q/C2), where
/// PLR(x) has a kink.
struct KernelGrid {
    Eigen::VectorXd x;
    Eigen::VectorXd v_gw;
    Eigen::VectorXd v_both;
    Eigen::VectorXd v_one;
    Eigen::VectorXd v_mote;

    Eigen::Index size() const { return x.size(); }
};

KernelGrid make_kernel_grid(const PathLossParams<double>& params, int grid_points);

/// Distance-independent ingredients of one tagged (MCS, group) under `loads`.
struct LinkTerms {
    double channel_load = 0.0;   // (l_i - lambda_g) / F, frames/s per main channel
    double t_data = 0.0;
    double t_ack = 0.0;
    double ack1_channel_free = 1.0;  // no other first-window ACK on air on (channel, ACK MCS)
    double ack1_no_uplink = 1.0;     // no uplink on air at the ACK MCS when ACK1 starts
    double ack1_interferers = 0.0;   // mean uplinks starting during ACK1
    double ack2_success = 1.0;       // service channel free at T2
    double no_new_frame = 1.0;       // P^G for one retry cycle
    double recollision = 0.0;        // both motes of a V^Both collision meet again
    bool ideal_ack = false;
};

LinkTerms link_terms(int mcs, const GroupSpec& group, const LoadVector& loads,
                     const Scenario& scenario);

/// Probability that no new frame is generated during one attempt. For retries
/// the random back-off D ~ U[delay_min, delay_max] is included exactly:
/// E[exp(-lambda (D + span))].
double p_no_new_frame(const GroupSpec& group, double attempt_span, bool is_retry,
                      const RadioTiming& timing);

/// P(|D0 - D1| < airtime) for independent uniform delays on [delay_min, delay_max].
double retry_overlap_probability(double airtime, double delay_min, double delay_max);

struct FixedPointResult {
    double value = 1.0;
    int iterations = 0;
    bool used_bisection = false;
};

/// Solves P = exp(-(2 T + P Ta) L) + 2 L T exp(-2 L T) V for P in [0, 1],
/// where L is the per-channel competing load.
FixedPointResult solve_data_success(double channel_load, double t_data, double t_ack,
                                    double v_gw);

/// Same equation solved by plain bisection on P - f(P).
double solve_data_success_bisection(double channel_load, double t_data, double t_ack,
                                    double v_gw);

double p_data_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                      const Scenario& scenario);

double p_ack_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                     const Scenario& scenario);

double p_first_attempt_success(double x, int mcs, const GroupSpec& group,
                               const LoadVector& loads, const Scenario& scenario);

/// What happened to the attempt preceding a retransmission.
enum class PriorOutcome {
    both_lost,        // collision where neither frame survived
    interferer_won,   // collision where only the interferer's frame survived
    unconditional,    // weighted over the causes of failure
};

double p_retry_success(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario,
                       PriorOutcome prior = PriorOutcome::unconditional);

double plr_at(double x, int mcs, const GroupSpec& group, const LoadVector& loads,
              const Scenario& scenario);

/// Per-attempt probabilities at one distance, for callers that want the parts.
struct AttemptProbabilities {
    double data = 1.0;
    double ack = 1.0;
    double first = 1.0;
    double retry = 1.0;
    double plr = 0.0;
};

AttemptProbabilities attempt_probabilities(const LinkTerms& terms, int retry_limit,
                                           const CaptureOutcome<double>& outcome,
                                           double v_mote);

/// PLR sampled over the disc together with its rho-weighted distribution.
/// Between samples PLR is linear in x, which makes the average and the CDF
/// exact for the interpolant.
class PlrProfile {
public:
    PlrProfile(Eigen::VectorXd x, Eigen::VectorXd plr, double radius);

    const Eigen::VectorXd& x() const { return x_; }
    const Eigen::VectorXd& plr() const { return plr_; }
    double radius() const { return radius_; }

    double max_plr() const { return max_; }
    double argmax() const { return x_[argmax_]; }
    double min_plr() const { return plr_.minCoeff(); }
    double average_plr() const { return average_; }

    /// Linear interpolation between samples.
    double interpolate(double x) const;
    /// Mean PLR of a uniformly placed mote given its distance lies in [a, b].
    double average_over(double a, double b) const;

    /// P(PLR < y) for a mote placed uniformly in the disc.
    double cdf(double y) const;
    /// P(PLR <= y).
    double cdf_inclusive(double y) const;
    /// Smallest y with P(PLR <= y) >= p, p in (0, 1].
    double percentile(double p) const;
    /// Share of motes whose PLR is at least `fraction` of the maximum.
    double mass_near_max(double fraction) const;

    /// (y, P(PLR < y)) on `points` evenly spaced levels from min to max, plus a
    /// final level just above the maximum where the CDF reaches 1.
    std::vector<std::pair<double, double>> cdf_curve(int points) const;

private:
    Eigen::VectorXd x_;
    Eigen::VectorXd plr_;
    double radius_;
    double max_ = 0.0;
    Eigen::Index argmax_ = 0;
    double average_ = 0.0;
};

PlrProfile plr_profile(int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario, const KernelGrid& kernels);

PlrProfile plr_profile(int mcs, const GroupSpec& group, const LoadVector& loads,
                       const Scenario& scenario, int grid_points);

double average_plr(int mcs, const GroupSpec& group, const LoadVector& loads,
                   const Scenario& scenario);

}  // namespace loraplan
