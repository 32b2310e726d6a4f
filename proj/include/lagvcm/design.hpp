#pragma once

#include "lagvcm/basis.hpp"

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>

namespace lagvcm {

/// Observed triples (t_i, x_i, y_i). Immutable after construction.
///
/// x is stored n x r (one row per observation). Coefficient indices are
/// zero-based throughout the library.
class Dataset {
public:
    /// Validates consistent sizes, n >= 1, r >= 1 and t_i > 0.
    Dataset(Eigen::VectorXd t, Eigen::MatrixXd x, Eigen::VectorXd y);

    Eigen::Index n() const noexcept { return t_.size(); }
    Eigen::Index r() const noexcept { return x_.cols(); }
    const Eigen::VectorXd& t() const noexcept { return t_; }
    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }

    /// Rows listed in `rows` (duplicates allowed), in that order.
    Dataset subset(const std::vector<Eigen::Index>& rows) const;

private:
    Eigen::VectorXd t_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

/// Per-coefficient truncation levels (M_1, ..., M_r).
class TruncationPlan {
public:
    TruncationPlan() = default;
    explicit TruncationPlan(std::vector<int> levels);
    TruncationPlan(std::initializer_list<int> levels);

    std::size_t size() const noexcept { return levels_.size(); }
    int level(std::size_t l) const { return levels_.at(l); }
    const std::vector<int>& levels() const noexcept { return levels_; }
    /// Sum of all levels, the number of columns of the design matrix.
    Eigen::Index total() const noexcept { return total_; }
    /// First flat index of block l.
    Eigen::Index offset(std::size_t l) const;

    friend bool operator==(const TruncationPlan&, const TruncationPlan&) = default;

private:
    std::vector<int> levels_;
    Eigen::Index total_ = 0;
};

/// Flat Laguerre coefficient vector laid out block by block.
struct CoefficientVector {
    Eigen::VectorXd theta;
    TruncationPlan plan;

    CoefficientVector() = default;
    CoefficientVector(Eigen::VectorXd theta, TruncationPlan plan);

    /// Coefficients of block l (read-only view).
    Eigen::VectorBlock<const Eigen::VectorXd> block(std::size_t l) const;
};

/// Flat index of theta_{lk}: offset(l) + k. Throws OutOfRangeError.
Eigen::Index theta_index(std::size_t l, int k, const TruncationPlan& plan);

/// Block design matrix with entry (i, theta_index(l, k)) = phi~_k(t_i) x_{li}.
/// Throws DimensionError if n < plan.total() or the plan size differs from r.
Eigen::MatrixXd assemble_design(const Dataset& data, const TruncationPlan& plan,
                                const DesignDensity& h, double nu);

/// Relative singular-value threshold below which a design is rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// Householder QR of a full-column-rank design, reused for solves and leverages.
class LeastSquares {
public:
    /// Throws DimensionError when rows < cols, RankDeficientError when
    /// sigma_min <= kRankTolerance * sigma_max.
    explicit LeastSquares(const Eigen::MatrixXd& design);

    Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
    /// Diagonal of the hat matrix Phi (Phi^T Phi)^{-1} Phi^T.
    Eigen::VectorXd leverages() const;
    /// (Phi^T Phi)^{-1}, from the triangular factor.
    Eigen::MatrixXd inverse_gram() const;

    Eigen::Index rows() const noexcept { return qr_.rows(); }
    Eigen::Index cols() const noexcept { return qr_.cols(); }

private:
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

/// Minimiser of ||y - Phi theta||^2.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y);

} // namespace lagvcm
