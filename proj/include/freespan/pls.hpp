#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>

/// Partial least squares regression (single response), fit by iterative
/// covariance maximization with deflation of both X and y. The weight for
/// each component is the closed-form single-response maximizer w = X^T y
/// normalized to unit length, applied to the deflated matrices.
namespace freespan::pls {

struct PlsModel {
    Eigen::MatrixXd W;       // D x K, unit-norm weight vectors on deflated data
    Eigen::MatrixXd P;       // D x K, input loadings
    Eigen::MatrixXd W_star;  // D x K, rotated weights: T = X_c * W_star
    Eigen::VectorXd q;       // K, output loadings
    Eigen::VectorXd x_mean;  // D
    Eigen::VectorXd x_std;   // D, population std floored at 1e-12
    double y_mean = 0.0;
    bool truncated = false;  // fewer informative components than requested

    [[nodiscard]] int k() const { return static_cast<int>(q.size()); }
    [[nodiscard]] Eigen::Index dim() const { return x_mean.size(); }
};

/// Fits a K-component model. X is standardized and y centered internally;
/// all arithmetic is 64-bit. Throws "degenerate target" for constant y.
/// If the deflated covariance vanishes before K components the model is
/// truncated and flagged.
[[nodiscard]] PlsModel fit_pls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k);

/// Latent scores T = ((X - x_mean)/x_std) * W_star, one row per input row.
[[nodiscard]] Eigen::MatrixXd transform(const PlsModel& model, const Eigen::MatrixXd& X);

/// Predicted exposure length: transform(X) * q + y_mean.
[[nodiscard]] Eigen::VectorXd predict(const PlsModel& model, const Eigen::MatrixXd& X);

/// Cross-validated component count: the K <= k_max minimizing the summed
/// squared prediction error over round-robin folds, ties broken toward
/// smaller K.
[[nodiscard]] int select_components(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    int k_max, int n_folds);

/// JSON model files, "pls_format": 1.
void save_pls(const PlsModel& model, const std::filesystem::path& path);
[[nodiscard]] PlsModel load_pls(const std::filesystem::path& path);
[[nodiscard]] std::string pls_to_json(const PlsModel& model);
[[nodiscard]] PlsModel pls_from_json(const std::string& text);

} // namespace freespan::pls
