#pragma once

#include <vector>

#include "fray/geometry.hpp"

namespace fray {

/// Slope parameter of the sigmoid that maps signed distance to transparency.
/// `s` is the global trainable scale; `adaptive_coeff` is a per-ray gain
/// computed from gradient norms (1 = no adaptation). The effective scale is
/// their product.
struct ScaleParam {
    double s = 1.0;
    double adaptive_coeff = 1.0;

    double effective() const { return s * adaptive_coeff; }
};

/// Logistic sigmoid 1 / (1 + exp(-s*f)).
/// Branches on the sign of s*f so the exponential never overflows: for
/// s*f >= 0 it evaluates 1/(1+exp(-sf)), otherwise exp(sf)/(1+exp(sf)).
double psi(double s, double f);

/// Derivative of psi with respect to f: s * psi * (1 - psi). Maximum s/4 at
/// f = 0.
double psi_prime(double s, double f);

/// Transparency T = psi evaluated with the effective (adaptive) scale.
double transparency(const ScaleParam& scale, double f);

/// Volume density at a sample: s_eff * (psi_{s_eff}(f) - 1) * (grad f . d).
/// May be negative at multi-intersection exits; the alpha clamp downstream is
/// the only correction applied.
double sigma(const ScaleParam& scale, double f, double grad_dot_d);

/// Signed-distance samples along one ray at strictly ascending parameters t.
struct RaySamples {
    std::vector<double> t;
    std::vector<double> f;
    std::vector<Vec3> grad;
    std::vector<double> grad_dot_d;
    /// Samples whose field evaluation was flagged (singular gradient / NaN).
    std::vector<bool> flagged;

    size_t size() const { return t.size(); }
    bool valid() const;
};

/// Discrete alpha-composited quadrature along one ray.
/// alpha[i] = clamp(1 - exp(-sigma_i * dt_i), 0, 1), T[0] = 1,
/// T[i+1] = T[i] * (1 - alpha[i]), weight[i] = T[i] * alpha[i].
/// The last interval width is the mean of the others (open discretization).
struct RayQuadrature {
    std::vector<double> dt;
    std::vector<double> sigma;
    std::vector<double> alpha;
    std::vector<double> T;
    std::vector<double> weight;

    double weight_sum() const;
    size_t size() const { return alpha.size(); }
};

/// Runs the discrete transparency model over the samples. Throws
/// std::invalid_argument when fewer than two samples are given.
RayQuadrature quadrature(const RaySamples& samples, const ScaleParam& scale);

/// Per-ray adaptive gain c = exp(sum_i w_i * |grad f_i| - 1) with weights
/// w_i = psi'_s(f_i) / sum_j psi'_s(f_j) computed at the global scale s.
/// When every psi' underflows to zero (all samples saturated) the gain
/// falls back to 1 and `saturated` is set.
struct AdaptiveCoeff {
    double c = 1.0;
    bool saturated = false;
};
AdaptiveCoeff adaptive_coeff(const RaySamples& samples, const ScaleParam& scale);

}  // namespace fray
