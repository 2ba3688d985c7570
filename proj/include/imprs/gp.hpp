#pragma once

// Gaussian-process regression with a squared-exponential ARD kernel. Inputs are
// standardized per column, targets are centered; hyperparameters maximize the
// marginal likelihood.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace imprs {

struct GpOptions {
    int restarts = 3;
    int max_fit_points = 300;        ///< hyperparameters are fitted on a random subset of this size
    std::uint64_t seed = 1;
    std::optional<double> fixed_noise_std;  ///< in target units; fitted when absent
    double min_noise_std = 1e-4;
};

struct GpHyperparameters {
    std::vector<double> lengthscales;  ///< in standardized input units
    double signal_std = 1.0;
    double noise_std = 0.1;
};

class GaussianProcess {
public:
    GaussianProcess() = default;
    GaussianProcess(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpOptions& options = {});

    int dim() const { return static_cast<int>(x_mean_.size()); }
    int size() const { return static_cast<int>(Xs_.rows()); }
    const GpHyperparameters& hyperparameters() const { return hyper_; }
    double jitter() const { return jitter_; }

    /// Predictive mean of the latent function at a raw input.
    double mean(const Eigen::VectorXd& x) const;
    /// Gradient of the predictive mean with respect to the raw input.
    Eigen::VectorXd mean_gradient(const Eigen::VectorXd& x) const;
    /// Predictive variance of the latent function (noise excluded).
    double variance(const Eigen::VectorXd& x) const;
    /// Leave-one-out residuals y_i - mean_{-i}(x_i), in closed form.
    Eigen::VectorXd loo_residuals() const;
    /// Negative log marginal likelihood of the fitted model.
    double nlml() const { return nlml_; }

private:
    Eigen::VectorXd standardize(const Eigen::VectorXd& x) const;
    Eigen::VectorXd kernel_row(const Eigen::VectorXd& xs) const;
    void factorize();

    Eigen::VectorXd x_mean_;
    Eigen::VectorXd x_scale_;
    double y_mean_ = 0.0;
    Eigen::MatrixXd Xs_;
    Eigen::VectorXd yc_;
    GpHyperparameters hyper_;
    double jitter_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double nlml_ = 0.0;
};

/// Negative log marginal likelihood and its gradient with respect to
/// theta = (log lengthscales..., log signal_std, log noise_std).
double gp_nlml(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, const std::vector<double>& theta,
               std::vector<double>* grad, double jitter = 1e-10);

}  // namespace imprs
