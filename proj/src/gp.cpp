#include "imprs/gp.hpp"

#include "imprs/errors.hpp"
#include "imprs/lbfgs.hpp"
#include "imprs/numerics.hpp"
#include "imprs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace imprs {
namespace {

Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& Xs, const std::vector<double>& ell, double sf)
{
    const Eigen::Index n = Xs.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = sf * sf;
        for (Eigen::Index j = 0; j < i; ++j) {
            double r2 = 0.0;
            for (Eigen::Index d = 0; d < Xs.cols(); ++d) {
                const double t = (Xs(i, d) - Xs(j, d)) / ell[static_cast<std::size_t>(d)];
                r2 += t * t;
            }
            K(i, j) = K(j, i) = sf * sf * std::exp(-0.5 * r2);
        }
    }
    return K;
}

}  // namespace

double gp_nlml(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, const std::vector<double>& theta,
               std::vector<double>* grad, double jitter)
{
    const Eigen::Index n = Xs.rows();
    const std::size_t d = static_cast<std::size_t>(Xs.cols());
    std::vector<double> ell(d);
    for (std::size_t i = 0; i < d; ++i) ell[i] = std::exp(theta[i]);
    const double sf = std::exp(theta[d]);
    const double sn = std::exp(theta[d + 1]);

    const Eigen::MatrixXd Kf = se_kernel(Xs, ell, sf);
    Eigen::MatrixXd K = Kf;
    K.diagonal().array() += sn * sn + jitter * sf * sf;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y);
    const Eigen::MatrixXd L = llt.matrixL();
    const double value = 0.5 * y.dot(alpha) + L.diagonal().array().log().sum() +
                         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
        grad->assign(d + 2, 0.0);
        const Eigen::MatrixXd W = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double wk = W(i, j) * Kf(i, j);
                for (std::size_t k = 0; k < d; ++k) {
                    const double t = (Xs(i, static_cast<Eigen::Index>(k)) - Xs(j, static_cast<Eigen::Index>(k))) / ell[k];
                    (*grad)[k] -= 0.5 * wk * t * t;
                }
                (*grad)[d] -= wk;
            }
        (*grad)[d + 1] = -W.trace() * sn * sn;
    }
    return value;
}

GaussianProcess::GaussianProcess(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpOptions& options)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n < 2 || y.size() != n) throw std::invalid_argument("GaussianProcess needs at least two samples");
    if (!X.allFinite() || !y.allFinite()) throw NumericalError("GaussianProcess: non-finite training data");

    x_mean_ = X.colwise().mean().transpose();
    x_scale_.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double sd = std::sqrt((X.col(k).array() - x_mean_(k)).square().mean());
        x_scale_(k) = sd > 1e-12 ? sd : 1.0;
    }
    Xs_ = (X.rowwise() - x_mean_.transpose()).array().rowwise() / x_scale_.transpose().array();
    y_mean_ = y.mean();
    yc_ = y.array() - y_mean_;
    const double y_sd = std::sqrt(yc_.squaredNorm() / static_cast<double>(n));
    const double noise_floor = options.fixed_noise_std.value_or(options.min_noise_std);

    hyper_.lengthscales.assign(static_cast<std::size_t>(d), 1.0);
    if (y_sd <= 1e-12 * (1.0 + std::abs(y_mean_))) {
        hyper_.signal_std = 1e-6;
        hyper_.noise_std = std::max(noise_floor, 1e-6);
        factorize();
        return;
    }

    // Hyperparameter search on a deterministic subset.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng = substream(options.seed, "gp-fit");
    if (n > options.max_fit_points) {
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
        idx.resize(static_cast<std::size_t>(options.max_fit_points));
        std::sort(idx.begin(), idx.end());
    }
    Eigen::MatrixXd Xf(static_cast<Eigen::Index>(idx.size()), d);
    Eigen::VectorXd yf(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        Xf.row(static_cast<Eigen::Index>(i)) = Xs_.row(idx[i]);
        yf(static_cast<Eigen::Index>(i)) = yc_(idx[i]);
    }

    const std::size_t p = static_cast<std::size_t>(d) + 2;
    std::vector<double> lo(p), hi(p);
    for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
        lo[k] = std::log(0.05);
        hi[k] = std::log(100.0);
    }
    lo[p - 2] = std::log(1e-6 * y_sd);
    hi[p - 2] = std::log(1e3 * y_sd);
    lo[p - 1] = std::log(noise_floor);
    hi[p - 1] = std::max(lo[p - 1], std::log(10.0 * y_sd));
    const bool fixed_noise = options.fixed_noise_std.has_value();

    auto objective = [&](const std::vector<double>& theta, std::vector<double>& grad) {
        std::vector<double> t = theta;
        if (fixed_noise) t[p - 1] = lo[p - 1];
        double v = gp_nlml(Xf, yf, t, &grad, 1e-8);
        if (!std::isfinite(v)) return v;
        if (fixed_noise) grad[p - 1] = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
            const double below = lo[k] - theta[k];
            const double above = theta[k] - hi[k];
            if (below > 0) {
                v += 1e3 * below * below;
                grad[k] -= 2e3 * below;
            }
            if (above > 0) {
                v += 1e3 * above * above;
                grad[k] += 2e3 * above;
            }
        }
        return v;
    };

    std::vector<double> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int start = 0; start < std::max(1, options.restarts); ++start) {
        std::vector<double> theta(p, 0.0);
        theta[p - 2] = std::log(y_sd);
        theta[p - 1] = std::clamp(std::log(0.1 * y_sd), lo[p - 1], hi[p - 1]);
        if (start > 0)
            for (auto& t : theta) t += 0.7 * standard_normal(rng);
        const auto res = lbfgs_minimize(objective, theta);
        if (res.value < best_value) {
            best_value = res.value;
            best = res.x;
        }
    }
    if (best.empty()) throw NumericalError("GaussianProcess: marginal likelihood could not be evaluated");
    for (std::size_t k = 0; k < p; ++k) best[k] = std::clamp(best[k], lo[k], hi[k]);
    if (fixed_noise) best[p - 1] = lo[p - 1];
    for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) hyper_.lengthscales[k] = std::exp(best[k]);
    hyper_.signal_std = std::exp(best[p - 2]);
    hyper_.noise_std = std::exp(best[p - 1]);
    factorize();
}

void GaussianProcess::factorize()
{
    const Eigen::Index n = Xs_.rows();
    const double sf2 = hyper_.signal_std * hyper_.signal_std;
    const Eigen::MatrixXd Kf = se_kernel(Xs_, hyper_.lengthscales, hyper_.signal_std);
    for (double rel : {0.0, 1e-10, 1e-8, 1e-6, 1e-4}) {
        Eigen::MatrixXd K = Kf;
        K.diagonal().array() += hyper_.noise_std * hyper_.noise_std + rel * sf2;
        llt_.compute(K);
        if (llt_.info() == Eigen::Success && llt_.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
            jitter_ = rel * sf2;
            alpha_ = llt_.solve(yc_);
            const Eigen::MatrixXd L = llt_.matrixL();
            nlml_ = 0.5 * yc_.dot(alpha_) + L.diagonal().array().log().sum() +
                    0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
            return;
        }
    }
    throw NumericalError("GaussianProcess: kernel matrix is not positive definite even with jitter 1e-4");
}

Eigen::VectorXd GaussianProcess::standardize(const Eigen::VectorXd& x) const
{
    return (x - x_mean_).array() / x_scale_.array();
}

Eigen::VectorXd GaussianProcess::kernel_row(const Eigen::VectorXd& xs) const
{
    const double sf2 = hyper_.signal_std * hyper_.signal_std;
    Eigen::VectorXd k(Xs_.rows());
    for (Eigen::Index i = 0; i < Xs_.rows(); ++i) {
        double r2 = 0.0;
        for (Eigen::Index d = 0; d < Xs_.cols(); ++d) {
            const double t = (xs(d) - Xs_(i, d)) / hyper_.lengthscales[static_cast<std::size_t>(d)];
            r2 += t * t;
        }
        k(i) = sf2 * std::exp(-0.5 * r2);
    }
    return k;
}

double GaussianProcess::mean(const Eigen::VectorXd& x) const
{
    return y_mean_ + kernel_row(standardize(x)).dot(alpha_);
}

Eigen::VectorXd GaussianProcess::mean_gradient(const Eigen::VectorXd& x) const
{
    const Eigen::VectorXd xs = standardize(x);
    const Eigen::VectorXd k = kernel_row(xs);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(xs.size());
    for (Eigen::Index i = 0; i < Xs_.rows(); ++i) {
        const double w = alpha_(i) * k(i);
        for (Eigen::Index d = 0; d < xs.size(); ++d) {
            const double l = hyper_.lengthscales[static_cast<std::size_t>(d)];
            g(d) -= w * (xs(d) - Xs_(i, d)) / (l * l);
        }
    }
    return g.array() / x_scale_.array();
}

double GaussianProcess::variance(const Eigen::VectorXd& x) const
{
    const Eigen::VectorXd k = kernel_row(standardize(x));
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    return std::max(0.0, hyper_.signal_std * hyper_.signal_std - v.squaredNorm());
}

Eigen::VectorXd GaussianProcess::loo_residuals() const
{
    const Eigen::Index n = Xs_.rows();
    const Eigen::MatrixXd Kinv = llt_.solve(Eigen::MatrixXd::Identity(n, n));
    return alpha_.array() / Kinv.diagonal().array();
}

}  // namespace imprs
