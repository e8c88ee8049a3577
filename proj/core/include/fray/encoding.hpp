#pragma once

#include <Eigen/Core>

#include "fray/geometry.hpp"

namespace fray {

/// Frequency-band positional encoding with a coarse-to-fine annealing window.
/// Band j carries [sin(2^j pi x), cos(2^j pi x)] per coordinate, scaled by
/// window(j, alpha, L); raw coordinates are appended (unwindowed) when
/// include_input is set.
///
/// Output layout, per column: bands j = 0..L-1 as
///   [sin_j(x1) sin_j(x2) sin_j(x3) cos_j(x1) cos_j(x2) cos_j(x3)],
/// then [x1 x2 x3] if include_input. Dimension 6L (+3).
struct EncodingConfig {
    int bands = 16;            // L
    double alpha = 1.0;        // annealing parameter in [0, 1]
    bool include_input = true;

    int dim() const { return 6 * bands + (include_input ? 3 : 0); }
    int raw_offset() const { return 6 * bands; }  // row of x1 when included
};

/// Annealing window (1 - cos(clamp(alpha*L - j, 0, 1) * pi)) / 2.
double window(int j, double alpha, int L);

/// Per-iteration annealing update: min(alpha + 1/n_max, 1).
double anneal_step(double alpha, long n_max);

/// Encodes a batch of points (3 x N) into (dim x N).
Eigen::MatrixXd encode(const Eigen::MatrixXd& points, const EncodingConfig& cfg);

/// Jacobian-vector product of the encoding: d(encode)/dx applied to tangent
/// columns (3 x N), evaluated at `points`. Returns (dim x N).
Eigen::MatrixXd encode_jvp(const Eigen::MatrixXd& points,
                           const Eigen::MatrixXd& tangents,
                           const EncodingConfig& cfg);

inline Eigen::VectorXd encode(const Vec3& x, const EncodingConfig& cfg) {
    return encode(Eigen::MatrixXd(x), cfg).col(0);
}

}  // namespace fray
