#pragma once

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "autoscope/field.hpp"

namespace autoscope::gp {

enum class KernelFamily { rbf, matern32, matern52 };

const char* kernel_family_name(KernelFamily f);
KernelFamily kernel_family_from_name(const std::string& name);

/// Stationary isotropic kernel: lengthscale in position units (nm),
/// signal_variance in (standardized) output units squared.
struct KernelSpec {
    KernelFamily family = KernelFamily::matern52;
    double lengthscale = 1.0;
    double signal_variance = 1.0;
};

double kernel_eval(const KernelSpec& spec, const Vec2& a, const Vec2& b);

/// Posterior mean and standard deviation over a query grid, in the original
/// (de-standardized) output units.
struct Posterior {
    ScalarField2D mean;
    ScalarField2D std;
};

struct FitConfig {
    // lengthscale search bounds; 0 = derive from the data (min pairwise
    // distance .. bounding-box diagonal). Campaigns pass grid spacing and
    // window diagonal here.
    double lengthscale_min = 0.0;
    double lengthscale_max = 0.0;
    int grid_points = 8;        // log-grid resolution per axis
    int nelder_mead_evals = 200;
    bool use_grid = true;       // skip the coarse grid when warm-started
    // warm start: (log lengthscale, log signal variance, log noise variance)
    std::optional<std::array<double, 3>> warm_start;
};

/// Fitted GP. Immutable after construction; posterior evaluation is safe
/// from multiple threads. Targets are standardized internally; predictions
/// are de-standardized on the way out.
class GpModel {
public:
    /// Direct construction with given hyperparameters (no search).
    /// noise_variance is in standardized target units.
    static GpModel make(const KernelSpec& kernel, double noise_variance,
                        std::vector<Vec2> xs, const std::vector<double>& ys);

    /// Maximum-likelihood fit: coarse log-grid search then Nelder-Mead
    /// refinement over (log l, log s2, log sn2). Deterministic.
    static GpModel fit(std::vector<Vec2> xs, const std::vector<double>& ys,
                       KernelFamily family, const FitConfig& config = {});

    struct Prediction {
        double mean;
        double std;
    };
    Prediction predict(const Vec2& x) const;
    Posterior posterior(const GridGeom& grid) const;

    /// -1/2 y^T alpha - sum log diag(L) - (n/2) log 2pi, on the stored
    /// standardized targets.
    double log_marginal_likelihood() const;

    const KernelSpec& kernel() const { return kernel_; }
    double noise_variance() const { return noise_variance_; }
    double y_mean() const { return y_mean_; }
    double y_std() const { return y_std_; }
    double prior_std() const { return y_std_ * std::sqrt(kernel_.signal_variance); }
    double jitter() const { return jitter_; }
    std::size_t train_size() const { return xs_.size(); }
    const std::vector<Vec2>& train_x() const { return xs_; }
    std::array<double, 3> log_params() const;

    /// Audit dump: hyperparameters + training set.
    nlohmann::ordered_json dump() const;

private:
    GpModel() = default;
    void factorize();  // builds chol_ and alpha_, escalating jitter

    KernelSpec kernel_;
    double noise_variance_ = 0.0;
    std::vector<Vec2> xs_;
    std::vector<double> ys_std_;  // standardized targets
    double y_mean_ = 0.0;
    double y_std_ = 1.0;
    std::vector<double> chol_;   // lower triangular factor of K + (sn2+jitter) I
    std::vector<double> alpha_;  // (K + sn2 I)^{-1} y
    double jitter_ = 0.0;
};

/// Marginal likelihood of (xs, ys) under the given hyperparameters; the
/// targets are standardized with their own mean/std first.
double log_marginal_likelihood(const KernelSpec& kernel, double noise_variance,
                               const std::vector<Vec2>& xs, const std::vector<double>& ys);

}  // namespace autoscope::gp
