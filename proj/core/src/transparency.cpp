#include "fray/transparency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fray {

double psi(double s, double f) {
    const double x = s * f;
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double psi_prime(double s, double f) {
    const double p = psi(s, f);
    return s * p * (1.0 - p);
}

double transparency(const ScaleParam& scale, double f) {
    return psi(scale.effective(), f);
}

double sigma(const ScaleParam& scale, double f, double grad_dot_d) {
    const double s_eff = scale.effective();
    return s_eff * (psi(s_eff, f) - 1.0) * grad_dot_d;
}

bool RaySamples::valid() const {
    const size_t k = t.size();
    if (k < 2) return false;
    if (f.size() != k || grad.size() != k || grad_dot_d.size() != k) return false;
    for (size_t i = 1; i < k; ++i)
        if (!(t[i] > t[i - 1])) return false;
    return true;
}

double RayQuadrature::weight_sum() const {
    return std::accumulate(weight.begin(), weight.end(), 0.0);
}

RayQuadrature quadrature(const RaySamples& samples, const ScaleParam& scale) {
    const size_t k = samples.size();
    if (k < 2) throw std::invalid_argument("quadrature: need at least 2 samples");

    RayQuadrature q;
    q.dt.resize(k);
    double mean_dt = 0.0;
    for (size_t i = 0; i + 1 < k; ++i) {
        q.dt[i] = samples.t[i + 1] - samples.t[i];
        mean_dt += q.dt[i];
    }
    mean_dt /= static_cast<double>(k - 1);
    q.dt[k - 1] = mean_dt;

    q.sigma.resize(k);
    q.alpha.resize(k);
    q.T.resize(k);
    q.weight.resize(k);
    double trans = 1.0;
    for (size_t i = 0; i < k; ++i) {
        q.sigma[i] = sigma(scale, samples.f[i], samples.grad_dot_d[i]);
        const double a = 1.0 - std::exp(-q.sigma[i] * q.dt[i]);
        q.alpha[i] = std::clamp(a, 0.0, 1.0);
        q.T[i] = trans;
        q.weight[i] = trans * q.alpha[i];
        trans *= 1.0 - q.alpha[i];
    }
    return q;
}

AdaptiveCoeff adaptive_coeff(const RaySamples& samples, const ScaleParam& scale) {
    AdaptiveCoeff out;
    double num = 0.0;
    double den = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double w = psi_prime(scale.s, samples.f[i]);
        num += w * samples.grad[i].norm();
        den += w;
    }
    if (den == 0.0) {
        out.c = 1.0;
        out.saturated = true;
        return out;
    }
    out.c = std::exp(num / den - 1.0);
    return out;
}

}  // namespace fray
