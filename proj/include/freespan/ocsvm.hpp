#pragma once

#include "freespan/dasio.hpp"
#include "freespan/preprocess.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

/// One-class SVM with RBF kernel, trained by two-coordinate descent
/// (SMO-style working-set updates) on the dual:
///   minimize 1/2 a^T Q a   s.t.  0 <= a_i <= 1/(nu*n),  sum a_i = 1,
/// with Q_ij = exp(-gamma ||t_i - t_j||^2). The signed decision value
/// f(t) = sum_i a_i k(sv_i, t) - rho is the anomaly score; f < 0 is
/// anomalous.
namespace freespan::ocsvm {

struct OcsvmModel {
    Eigen::MatrixXd support_vectors;  // S x K
    Eigen::VectorXd alphas;           // S, each in (0, 1/(nu*n)]
    double rho = 0.0;
    double gamma = 0.0;
    double nu = 0.0;
    std::vector<long> sv_indices;  // positions in the training set (not serialized)
};

/// Per-section detector: latent-space scaler + one-class SVM + the baseline
/// exposure length the section was trained at.
struct SectionModel {
    std::string section_id;
    double baseline_exposure_m = 0.0;
    preprocess::Scaler scaler;  // over latent space
    OcsvmModel svm;
    std::string pls_ref;  // identifier of the PLS model used
};

[[nodiscard]] double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma);

struct FitOptions {
    double tol = 1e-8;         // KKT violation stopping threshold
    long max_iter = 1'000'000;
};

[[nodiscard]] OcsvmModel fit_ocsvm(const Eigen::MatrixXd& latents, double nu, double gamma,
                                   const FitOptions& options = {});

[[nodiscard]] double decision_function(const OcsvmModel& model, const Eigen::VectorXd& t);

/// f(t) < 0 -> anomalous; exact zero is normal.
[[nodiscard]] dasio::Label classify(const OcsvmModel& model, const Eigen::VectorXd& t);

/// Default RBF width: 1 / (K * median per-dimension variance of the training
/// latents), with the variance floored to stay finite on degenerate data.
[[nodiscard]] double gamma_heuristic(const Eigen::MatrixXd& latents);

/// JSON files, "ocsvm_format": 1; the section file wraps the SVM block with
/// the scaler and baseline.
[[nodiscard]] std::string section_to_json(const SectionModel& model);
[[nodiscard]] SectionModel section_from_json(const std::string& text);
void save_section(const SectionModel& model, const std::filesystem::path& path);
[[nodiscard]] SectionModel load_section(const std::filesystem::path& path);

} // namespace freespan::ocsvm
