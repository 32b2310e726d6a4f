#pragma once

#include "lagvcm/design.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace lagvcm {

enum class KernelType { epanechnikov, gaussian };

/// Kernel and bandwidth shared by all coefficients.
struct KernelConfig {
    KernelType kernel = KernelType::epanechnikov;
    double bandwidth = 1.0;

    void validate() const;
};

/// K_h(u) = K(u/h)/h. The Epanechnikov kernel is 0.75(1 - v^2) for |v| < 1,
/// so only points with |t_i - t| < h receive weight.
double kernel_weight(const KernelConfig& cfg, double u);

enum class KernelMethod { local_linear, nadaraya_watson };

/// Kernel VCM estimator over a fixed dataset. Observations are kept in
/// t order, which makes every result independent of the input row order.
class KernelSmoother {
public:
    KernelSmoother(const Dataset& data, KernelMethod method);

    KernelMethod method() const noexcept { return method_; }
    const Dataset& data() const noexcept { return data_; }

    struct LocalFit {
        Eigen::VectorXd coefficients;
        Eigen::Index points = 0;   ///< positively weighted observations used
        double leverage = 0.0;     ///< smoother-matrix diagonal of `track`, if requested
    };

    /// Local fit at t. Row `exclude` (an index into the original dataset) is
    /// left out when given. Throws InsufficientDataError with fewer than 2r
    /// (local linear) or r (Nadaraya-Watson) positively weighted points and
    /// SingularMatrixError when the local system is singular.
    LocalFit fit_at(double t, const KernelConfig& cfg, std::optional<Eigen::Index> exclude = {},
                    std::optional<Eigen::Index> track = {}) const;

    /// (beta^_1(t), ..., beta^_r(t)).
    Eigen::VectorXd coefficients(double t, const KernelConfig& cfg,
                                 std::optional<Eigen::Index> exclude = {}) const;

    /// Diagonal entry of the smoother matrix for training row i.
    double self_leverage(Eigen::Index i, const KernelConfig& cfg) const;

private:
    Dataset data_;
    KernelMethod method_;
    std::vector<Eigen::Index> order_;  ///< row indices sorted by t
    std::vector<double> sorted_t_;
};

Eigen::VectorXd local_linear_fit(const Dataset& data, const KernelConfig& cfg, double t);
Eigen::VectorXd nadaraya_watson_fit(const Dataset& data, const KernelConfig& cfg, double t);

/// In-sample fitted values y^_i = sum_l beta^_l(t_i) x_li.
struct KernelFittedValues {
    Eigen::VectorXd fitted;       ///< NaN where the local fit failed
    std::vector<bool> ok;
    Eigen::Index skipped = 0;
    double trace = 0.0;           ///< sum of self-leverages over fitted rows
};
KernelFittedValues kernel_fitted_values(const KernelSmoother& smoother, const KernelConfig& cfg,
                                        bool with_trace = false);

struct BandwidthSelection {
    double bandwidth = 0.0;
    double cv_score = 0.0;
    Eigen::Index skipped = 0;     ///< left-out points that could not be predicted
    std::vector<double> scores;   ///< per grid entry, NaN when rejected
};

struct BandwidthOptions {
    KernelType kernel = KernelType::epanechnikov;
    /// A candidate is rejected when more than this fraction of the
    /// leave-one-out predictions fail.
    double max_skip_fraction = 0.01;
};

/// Literal leave-one-out CV over the grid: for each i, refit without row i
/// and predict at t_i. Score is the mean squared error over predicted rows.
/// Ties go to the larger bandwidth.
BandwidthSelection select_bandwidth_cv(const Dataset& data, KernelMethod method,
                                       std::span<const double> grid,
                                       const BandwidthOptions& options = {});

/// Log-spaced grid from 0.05 to 2 standard deviations of t.
std::vector<double> default_bandwidth_grid(const Dataset& data, int count = 20);

} // namespace lagvcm
