#include "nonreg/arrangement.hpp"

#include "nonreg/error.hpp"

namespace nonreg {

std::optional<AngleWindow> ellipse_direction_window(const Eigen::Vector2d& center, const Eigen::Matrix2d& shape,
                                                    double radius2) {
    const Eigen::Vector2d g = shape * center;
    const double k = center.dot(g) - radius2;
    if (k <= 0.0) return std::nullopt;
    const Eigen::Matrix2d q = g * g.transpose() - k * shape;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(q);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
    if (!(hi > 0.0) || !(lo < 0.0)) return std::nullopt;
    Eigen::Vector2d axis = eig.eigenvectors().col(1);
    const Eigen::Vector2d across = eig.eigenvectors().col(0);
    if (axis.dot(center) < 0.0) axis = -axis;
    const double t = std::sqrt(hi / -lo);
    const Eigen::Vector2d d1 = axis + t * across;
    const Eigen::Vector2d d2 = axis - t * across;
    const double a1 = std::atan2(d1.y(), d1.x());
    const double a2 = std::atan2(d2.y(), d2.x());
    const double ae = std::atan2(axis.y(), axis.x());
    double start = a2, width = detail::wrap_angle(a1 - a2);
    if (detail::wrap_angle(ae - a2) > width) {
        start = a1;
        width = detail::wrap_angle(a2 - a1);
    }
    return AngleWindow{detail::wrap_angle(start), width};
}

Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& normal) {
    const auto p = normal.size();
    if (p < 1 || normal.norm() == 0.0) throw ValidationError("orthogonal complement of a zero vector");
    const Eigen::MatrixXd column = normal;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(column);
    const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
    return full.rightCols(p - 1);
}

}  // namespace nonreg
