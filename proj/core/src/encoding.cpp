#include "fray/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace fray {

double window(int j, double alpha, int L) {
    if (j < 0 || j >= L) throw std::out_of_range("window: band index out of range");
    const double u = std::clamp(alpha * L - j, 0.0, 1.0);
    return 0.5 * (1.0 - std::cos(u * M_PI));
}

double anneal_step(double alpha, long n_max) {
    if (n_max < 1) throw std::invalid_argument("anneal_step: n_max must be >= 1");
    return std::min(alpha + 1.0 / static_cast<double>(n_max), 1.0);
}

Eigen::MatrixXd encode(const Eigen::MatrixXd& points, const EncodingConfig& cfg) {
    if (points.rows() != 3) throw std::invalid_argument("encode: points must be 3 x N");
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd out(cfg.dim(), n);
    for (int j = 0; j < cfg.bands; ++j) {
        const double freq = std::ldexp(M_PI, j);  // 2^j * pi
        const double w = window(j, cfg.alpha, cfg.bands);
        const auto arg = (freq * points).array();
        out.middleRows(6 * j, 3) = (w * arg.sin()).matrix();
        out.middleRows(6 * j + 3, 3) = (w * arg.cos()).matrix();
    }
    if (cfg.include_input) out.bottomRows(3) = points;
    return out;
}

Eigen::MatrixXd encode_jvp(const Eigen::MatrixXd& points,
                           const Eigen::MatrixXd& tangents,
                           const EncodingConfig& cfg) {
    if (points.rows() != 3 || tangents.rows() != 3 ||
        points.cols() != tangents.cols())
        throw std::invalid_argument("encode_jvp: shape mismatch");
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd out(cfg.dim(), n);
    for (int j = 0; j < cfg.bands; ++j) {
        const double freq = std::ldexp(M_PI, j);
        const double w = window(j, cfg.alpha, cfg.bands);
        const auto arg = (freq * points).array();
        const auto tan = tangents.array();
        out.middleRows(6 * j, 3) = ((w * freq) * arg.cos() * tan).matrix();
        out.middleRows(6 * j + 3, 3) = (-(w * freq) * arg.sin() * tan).matrix();
    }
    if (cfg.include_input) out.bottomRows(3) = tangents;
    return out;
}

}  // namespace fray
