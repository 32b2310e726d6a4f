#include "lagvcm/design.hpp"
#include "lagvcm/error.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace lagvcm {

Dataset::Dataset(Eigen::VectorXd t, Eigen::MatrixXd x, Eigen::VectorXd y)
    : t_(std::move(t)), x_(std::move(x)), y_(std::move(y)) {
    if (t_.size() < 1) throw DimensionError("dataset needs at least one observation");
    if (x_.rows() != t_.size() || y_.size() != t_.size()) {
        std::ostringstream os;
        os << "dataset sizes disagree: t has " << t_.size() << ", x has " << x_.rows()
           << " rows, y has " << y_.size();
        throw DimensionError(os.str());
    }
    if (x_.cols() < 1) throw DimensionError("dataset needs at least one covariate");
    for (Eigen::Index i = 0; i < t_.size(); ++i) {
        if (!(t_[i] > 0.0) || !std::isfinite(t_[i])) {
            std::ostringstream os;
            os << "effect modifier must be strictly positive; t[" << i << "] = " << t_[i];
            throw DomainError(os.str());
        }
    }
    if (!x_.allFinite() || !y_.allFinite()) throw DomainError("dataset contains non-finite values");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
    Eigen::MatrixXd x(t.size(), r());
    Eigen::VectorXd y(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const auto src = rows[static_cast<std::size_t>(i)];
        t[i] = t_[src];
        x.row(i) = x_.row(src);
        y[i] = y_[src];
    }
    return Dataset(std::move(t), std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------

TruncationPlan::TruncationPlan(std::vector<int> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw DomainError("truncation plan must have at least one level");
    for (int m : levels_) {
        if (m < 1) throw DomainError("truncation levels must be >= 1");
    }
    total_ = std::accumulate(levels_.begin(), levels_.end(), Eigen::Index{0});
}

TruncationPlan::TruncationPlan(std::initializer_list<int> levels)
    : TruncationPlan(std::vector<int>(levels)) {}

Eigen::Index TruncationPlan::offset(std::size_t l) const {
    if (l >= levels_.size()) throw OutOfRangeError("coefficient index out of range");
    return std::accumulate(levels_.begin(), levels_.begin() + static_cast<std::ptrdiff_t>(l),
                           Eigen::Index{0});
}

CoefficientVector::CoefficientVector(Eigen::VectorXd theta_, TruncationPlan plan_)
    : theta(std::move(theta_)), plan(std::move(plan_)) {
    if (theta.size() != plan.total())
        throw DimensionError("coefficient vector length does not match the plan total");
}

Eigen::VectorBlock<const Eigen::VectorXd> CoefficientVector::block(std::size_t l) const {
    return theta.segment(plan.offset(l), plan.level(l));
}

Eigen::Index theta_index(std::size_t l, int k, const TruncationPlan& plan) {
    if (l >= plan.size()) {
        std::ostringstream os;
        os << "coefficient index " << l << " out of range for a plan of size " << plan.size();
        throw OutOfRangeError(os.str());
    }
    if (k < 0 || k >= plan.level(l)) {
        std::ostringstream os;
        os << "degree " << k << " out of range for block " << l << " with M = " << plan.level(l);
        throw OutOfRangeError(os.str());
    }
    return plan.offset(l) + k;
}

Eigen::MatrixXd assemble_design(const Dataset& data, const TruncationPlan& plan,
                                const DesignDensity& h, double nu) {
    if (static_cast<Eigen::Index>(plan.size()) != data.r()) {
        std::ostringstream os;
        os << "plan has " << plan.size() << " levels but the dataset has r = " << data.r();
        throw DimensionError(os.str());
    }
    if (data.n() < plan.total()) {
        std::ostringstream os;
        os << "n = " << data.n() << " is smaller than the number of coefficients "
           << plan.total();
        throw DimensionError(os.str());
    }
    const int max_level = *std::max_element(plan.levels().begin(), plan.levels().end());
    Eigen::MatrixXd design(data.n(), plan.total());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const Eigen::VectorXd basis = weighted_basis_vector(data.t()[i], max_level, h, nu);
        Eigen::Index col = 0;
        for (std::size_t l = 0; l < plan.size(); ++l) {
            const int m = plan.level(l);
            design.row(i).segment(col, m) = basis.head(m).transpose() * data.x()(i, static_cast<Eigen::Index>(l));
            col += m;
        }
    }
    return design;
}

// ---------------------------------------------------------------------------

LeastSquares::LeastSquares(const Eigen::MatrixXd& design) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (p < 1) throw DimensionError("least squares needs at least one column");
    if (n < p) {
        std::ostringstream os;
        os << "least squares needs rows >= columns, got " << n << " x " << p;
        throw DimensionError(os.str());
    }
    qr_.compute(design);
    // Phi = QR, so Phi and R share singular values.
    const Eigen::MatrixXd r = qr_.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
    const double threshold = kRankTolerance * sv[0];
    if (!(sv[p - 1] > threshold)) {
        const auto rank = static_cast<long>((sv.array() > threshold).count());
        throw RankDeficientError(rank, static_cast<long>(p));
    }
}

Eigen::VectorXd LeastSquares::solve(const Eigen::VectorXd& y) const {
    if (y.size() != qr_.rows()) throw DimensionError("response length does not match the design");
    return qr_.solve(y);
}

Eigen::VectorXd LeastSquares::leverages() const {
    const Eigen::MatrixXd q =
        qr_.householderQ() * Eigen::MatrixXd::Identity(qr_.rows(), qr_.cols());
    return q.rowwise().squaredNorm();
}

Eigen::MatrixXd LeastSquares::inverse_gram() const {
    const Eigen::Index p = qr_.cols();
    const Eigen::MatrixXd r = qr_.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    return r_inv * r_inv.transpose();
}

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y) {
    return LeastSquares(Phi).solve(y);
}

} // namespace lagvcm
