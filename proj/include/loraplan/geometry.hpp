#pragma once

// Log-distance propagation, uniform-disc mote density and the pairwise capture
// kernels as functions of the tagged mote's distance x from the gateway.
// Everything here depends on x only through x / R.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loraplan/errors.hpp"

namespace loraplan {

template <typename Scalar>
struct PathLossParams {
    Scalar c1 = Scalar(-133.7);  // dBm, includes transmit power
    Scalar c2 = Scalar(44.9);    // dB per decade
    Scalar radius = Scalar(600);  // m
    Scalar q = Scalar(6);        // co-channel rejection, dB; +inf disables capture

    void validate() const {
        if (!(c2 > 0)) throw ValidationError("geometry.c2_db", "must be positive");
        if (!(radius > 0) || !std::isfinite(radius))
            throw ValidationError("geometry.radius_m", "must be positive and finite");
        if (!(q >= 0)) throw ValidationError("geometry.q_db", "must be non-negative");
    }

    /// 10^(Q/C2): the distance ratio equivalent to a Q dB power margin.
    Scalar margin_ratio() const { return std::pow(Scalar(10), q / c2); }

    /// R * 10^(-Q/C2): beyond this distance a tagged frame never wins a collision.
    Scalar capture_horizon() const { return radius / margin_ratio(); }

    bool operator==(const PathLossParams&) const = default;
};

template <typename Scalar>
struct CaptureOutcome {
    Scalar v_gw;    // tagged frame captured at the gateway
    Scalar v_both;  // both frames lost
    Scalar v_one;   // tagged frame lost, interferer received
};

/// Received power in dBm at `distance` metres.
template <typename Scalar>
Scalar path_loss(Scalar distance, const PathLossParams<Scalar>& params) {
    if (!(distance > 0))
        throw std::domain_error("path_loss: distance must be positive, got " +
                                std::to_string(static_cast<double>(distance)));
    return params.c1 - params.c2 * std::log10(distance);
}

/// Radial pdf 2r/R^2 of a mote placed uniformly in the disc.
template <typename Scalar>
Scalar radial_density(Scalar r, Scalar radius) {
    if (!(r >= 0) || r > radius)
        throw std::domain_error("radial_density: r outside [0, R]");
    return Scalar(2) * r / (radius * radius);
}

/// Probability mass of the radial density on [a, b], clipped to [0, R].
template <typename Scalar>
Scalar radial_mass(Scalar a, Scalar b, Scalar radius) {
    a = std::clamp(a, Scalar(0), radius);
    b = std::clamp(b, Scalar(0), radius);
    if (b <= a) return Scalar(0);
    return (b - a) * (b + a) / (radius * radius);
}

/// Outcome of a collision between the tagged frame (mote at distance x) and a
/// single interferer placed uniformly in the disc.
template <typename Scalar>
CaptureOutcome<Scalar> capture_outcome(Scalar x, const PathLossParams<Scalar>& params) {
    const Scalar radius = params.radius;
    if (!(x >= 0) || x > radius) throw std::domain_error("capture_outcome: x outside [0, R]");
    if (std::isinf(params.q)) return {Scalar(0), Scalar(1), Scalar(0)};
    if (x == 0) return {Scalar(1), Scalar(0), Scalar(0)};

    const Scalar u = x / radius;
    const Scalar u2 = u * u;

    const Scalar k2 = std::pow(Scalar(10), Scalar(2) * params.q / params.c2);
    const Scalar inv_k2 = Scalar(1) / k2;
    const Scalar v_one = u2 * inv_k2;
    if (x > params.capture_horizon()) return {Scalar(0), Scalar(1) - v_one, v_one};
    return {std::max(Scalar(0), Scalar(1) - u2 * k2), u2 * (k2 - inv_k2), v_one};
}

/// Probability that a first-window ACK sent by the gateway reaches the tagged
/// mote (distance x) despite one uplink interferer placed uniformly in the
/// disc: the interferer must be farther than x * 10^(Q/C2) from the mote.
///
/// Evaluated as the radial integral over the interferer's distance r of the
/// angular share of the circle where the power condition holds,
///   int_0^R 2r/R^2 * (1 - arccos(clamp(z))/pi) dr,
///   z = (x^2 + r^2 - x^2 10^(2Q/C2)) / (2 x r).
/// Outside [x(k-1), x(k+1)] the clamp saturates and the integrand is closed
/// form, so quadrature only runs on the band in between.
template <typename Scalar>
Scalar ack_capture_prob(Scalar x, const PathLossParams<Scalar>& params,
                        Scalar tolerance = Scalar(1e-12)) {
    const Scalar radius = params.radius;
    if (!(x >= 0) || x > radius) throw std::domain_error("ack_capture_prob: x outside [0, R]");
    if (std::isinf(params.q)) return Scalar(0);
    if (x == 0) return Scalar(1);

    // Work in units of R so that the kernel depends on x / R only.
    const Scalar u = x / radius;
    const Scalar k = params.margin_ratio();
    const Scalar inner = u * (k - Scalar(1));  // below: always inside the losing circle
    const Scalar outer = u * (k + Scalar(1));  // above: always outside
    if (inner >= Scalar(1)) return Scalar(0);

    const Scalar k2u2 = u * u * k * k;
    auto integrand = [&](Scalar s) -> Scalar {
        if (s <= 0) return Scalar(0);
        const Scalar z = std::clamp((u * u + s * s - k2u2) / (Scalar(2) * u * s), Scalar(-1), Scalar(1));
        return Scalar(2) * s * (Scalar(1) - std::acos(z) / std::numbers::pi_v<Scalar>);
    };

    const Scalar lo = std::max(inner, Scalar(0));
    const Scalar band_end = std::min(Scalar(1), outer);
    // arccos has square-root endpoints; s = mid - half cos(t) smooths them out
    const Scalar mid = (lo + band_end) / Scalar(2);
    const Scalar half = (band_end - lo) / Scalar(2);
    auto smoothed = [&](Scalar t) -> Scalar {
        return integrand(mid - half * std::cos(t)) * half * std::sin(t);
    };
    Scalar error = 0;
    const Scalar band = boost::math::quadrature::gauss_kronrod<Scalar, 31>::integrate(
        smoothed, Scalar(0), std::numbers::pi_v<Scalar>, 12, tolerance, &error);
    // the reported estimate is on the [-1, 1] reference interval
    const Scalar abs_error = error * std::numbers::pi_v<Scalar> / Scalar(2);
    if (abs_error > Scalar(1e-9))
        throw ConvergenceError("ack_capture_prob: quadrature error estimate " +
                                   std::to_string(static_cast<double>(abs_error)) +
                                   " exceeds 1e-9",
                               static_cast<double>(abs_error));
    const Scalar tail = radial_mass(band_end, Scalar(1), Scalar(1));
    return std::clamp(band + tail, Scalar(0), Scalar(1));
}

}  // namespace loraplan
