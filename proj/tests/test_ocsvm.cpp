#include "freespan/ocsvm.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

using namespace freespan;
using oracles::brute_force_dual;
using oracles::kernel_matrix;

namespace {

double model_objective(const ocsvm::OcsvmModel& model) {
    const Eigen::MatrixXd q = kernel_matrix(model.support_vectors, model.gamma);
    return 0.5 * model.alphas.dot(q * model.alphas);
}

Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k,
                              double spread = 1.0) {
    std::normal_distribution<double> val(0.0, spread);
    Eigen::MatrixXd pts(n, k);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = val(rng);
    return pts;
}

} // namespace

TEST_CASE("rbf kernel basics") {
    Eigen::VectorXd a(2), b(2);
    a << 0.0, 0.0;
    b << 1.0, 1.0;
    CHECK(ocsvm::rbf_kernel(a, a, 0.7) == 1.0);
    CHECK(ocsvm::rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd u = random_points(rng, 1, 4).row(0).transpose();
        const Eigen::VectorXd v = random_points(rng, 1, 4).row(0).transpose();
        CHECK(ocsvm::rbf_kernel(u, v, 1.3) == ocsvm::rbf_kernel(v, u, 1.3));
        CHECK(ocsvm::rbf_kernel(u, v, 1.3) > 0.0);
        CHECK(ocsvm::rbf_kernel(u, v, 1.3) <= 1.0);
    }
    CHECK_THROWS_AS(ocsvm::rbf_kernel(a, Eigen::VectorXd::Zero(3), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ocsvm::rbf_kernel(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("identical training points sit on the boundary") {
    Eigen::MatrixXd pts(5, 2);
    for (int i = 0; i < 5; ++i) pts.row(i) << 1.5, -0.75;
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, 0.4, 1.0);
    CHECK(model.rho == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ocsvm::decision_function(model, pts.row(0).transpose()) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("nu = 1 forces alpha_i = 1/n for every point") {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd pts = random_points(rng, 8, 2);
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, 1.0, 0.8);
    REQUIRE(model.alphas.size() == 8);
    for (Eigen::Index i = 0; i < 8; ++i)
        CHECK(model.alphas(i) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("SMO solution matches the brute-force dual on n = 6") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        const Eigen::MatrixXd pts = random_points(rng, 6, 2);
        const double gamma = 1.0;
        const double nu = 0.5;
        const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, nu, gamma);

        const auto oracle = brute_force_dual(kernel_matrix(pts, gamma), nu);
        REQUIRE(oracle.has_value());
        CHECK(std::abs(model_objective(model) - oracle->objective) <= 1e-6);
        CHECK(std::abs(model.rho - oracle->rho) <= 1e-4);

        Eigen::VectorXd full_alpha = Eigen::VectorXd::Zero(6);
        for (Eigen::Index i = 0; i < model.alphas.size(); ++i)
            full_alpha(model.sv_indices[static_cast<std::size_t>(i)]) = model.alphas(i);
        CHECK((full_alpha - oracle->alpha).cwiseAbs().maxCoeff() <= 1e-4);
    }
}

TEST_CASE("dual feasibility holds after every fit") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 10 + 7 * trial;
        const double nu = 0.1 + 0.08 * static_cast<double>(trial);
        const Eigen::MatrixXd pts = random_points(rng, n, 3);
        const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, nu, 0.5);
        CHECK(std::abs(model.alphas.sum() - 1.0) <= 1e-9);
        const double c_bound = 1.0 / (nu * static_cast<double>(n));
        for (Eigen::Index i = 0; i < model.alphas.size(); ++i) {
            CHECK(model.alphas(i) > 0.0);
            CHECK(model.alphas(i) <= c_bound + 1e-12);
        }
    }
}

TEST_CASE("unbounded support vectors lie on the decision boundary") {
    std::mt19937_64 rng(17);
    const Eigen::MatrixXd pts = random_points(rng, 40, 2);
    const double nu = 0.3;
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, nu, 0.7);
    const double c_bound = 1.0 / (nu * 40.0);
    bool saw_free = false;
    for (Eigen::Index i = 0; i < model.alphas.size(); ++i) {
        if (model.alphas(i) < c_bound - 1e-9) {
            saw_free = true;
            const double f =
                ocsvm::decision_function(model, model.support_vectors.row(i).transpose());
            CHECK(std::abs(f) < 1e-3);
        }
    }
    CHECK(saw_free);
}

TEST_CASE("points far from every support vector score about -rho") {
    std::mt19937_64 rng(19);
    const Eigen::MatrixXd pts = random_points(rng, 20, 2);
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, 0.2, 1.0);
    Eigen::VectorXd far(2);
    far << 1e3, -1e3;
    const double f = ocsvm::decision_function(model, far);
    CHECK(f == doctest::Approx(-model.rho).epsilon(1e-12));
    CHECK(f < 0.0);
    CHECK(model.rho > 0.0);
}

TEST_CASE("nu bounds the outlier fraction and the support-vector fraction") {
    std::mt19937_64 rng(23);
    for (const Eigen::Index n : {20, 50, 200}) {
        for (const double nu : {0.1, 0.3, 0.5}) {
            const Eigen::MatrixXd pts = random_points(rng, n, 2);
            const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, nu, 0.6);
            // points within the solver's KKT band around zero are boundary
            // points, not margin errors
            long outliers = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (ocsvm::decision_function(model, pts.row(i).transpose()) < -1e-6) ++outliers;
            const double slack = 2.0 / static_cast<double>(n);
            const double outlier_frac = static_cast<double>(outliers) / static_cast<double>(n);
            const double sv_frac =
                static_cast<double>(model.alphas.size()) / static_cast<double>(n);
            CHECK(outlier_frac <= nu + slack);
            CHECK(sv_frac >= nu - slack);
        }
    }
}

TEST_CASE("decision function is Lipschitz with the analytic RBF bound") {
    std::mt19937_64 rng(29);
    const double gamma = 1.7;
    const Eigen::MatrixXd pts = random_points(rng, 30, 3);
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(pts, 0.25, gamma);
    const double lipschitz = std::sqrt(2.0 * gamma / std::numbers::e);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd a = random_points(rng, 1, 3).row(0).transpose() * 2.0;
        const Eigen::VectorXd b = a + random_points(rng, 1, 3).row(0).transpose() * 0.3;
        const double fa = ocsvm::decision_function(model, a);
        const double fb = ocsvm::decision_function(model, b);
        CHECK(std::abs(fa - fb) <= lipschitz * (a - b).norm() + 1e-12);
    }
}

TEST_CASE("classification follows the sign rule with zero mapped to normal") {
    ocsvm::OcsvmModel model;
    model.support_vectors = Eigen::MatrixXd::Zero(1, 1);
    model.alphas = Eigen::VectorXd::Ones(1);
    model.gamma = 1.0;
    model.nu = 0.5;

    model.rho = 1.2;  // f(0) = 1 - 1.2 = -0.2
    CHECK(ocsvm::classify(model, Eigen::VectorXd::Zero(1)) == dasio::Label::anomalous);
    model.rho = 1.0;  // f(0) = 0
    CHECK(ocsvm::classify(model, Eigen::VectorXd::Zero(1)) == dasio::Label::normal);
    model.rho = 0.9;  // f(0) = +0.1
    CHECK(ocsvm::classify(model, Eigen::VectorXd::Zero(1)) == dasio::Label::normal);
}

TEST_CASE("non-convergence reports the achieved KKT violation") {
    std::mt19937_64 rng(41);
    const Eigen::MatrixXd pts = random_points(rng, 30, 2);
    ocsvm::FitOptions opts;
    opts.tol = 0.0;  // unreachable
    opts.max_iter = 3;
    CHECK_THROWS_WITH_AS(ocsvm::fit_ocsvm(pts, 0.3, 0.8, opts),
                         doctest::Contains("KKT violation"), std::runtime_error);
}

TEST_CASE("invalid parameters and degenerate sizes") {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd pts = random_points(rng, 5, 2);
    CHECK_THROWS_WITH_AS(ocsvm::fit_ocsvm(pts, 0.0, 1.0), doctest::Contains("invalid nu"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(ocsvm::fit_ocsvm(pts, 1.5, 1.0), doctest::Contains("invalid nu"),
                         std::invalid_argument);
    CHECK_THROWS_AS(ocsvm::fit_ocsvm(pts, 0.5, -1.0), std::invalid_argument);

    // n = 1 degenerate single-point model
    const Eigen::MatrixXd one = random_points(rng, 1, 2);
    const ocsvm::OcsvmModel model = ocsvm::fit_ocsvm(one, 0.5, 1.0);
    REQUIRE(model.alphas.size() == 1);
    CHECK(model.alphas(0) == doctest::Approx(1.0));
    CHECK(ocsvm::decision_function(model, one.row(0).transpose()) ==
          doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(ocsvm::decision_function(model, Eigen::VectorXd::Zero(5)),
                    std::invalid_argument);
}

TEST_CASE("section model JSON round-trips") {
    testutil::TempDir dir("ocsvm_json");
    std::mt19937_64 rng(37);
    const Eigen::MatrixXd pts = random_points(rng, 12, 3);

    ocsvm::SectionModel section;
    section.section_id = "S1";
    section.baseline_exposure_m = 6.0;
    section.pls_ref = "pls.json";
    section.scaler.means = Eigen::VectorXd::Constant(3, 0.25);
    section.scaler.stds = Eigen::VectorXd::Constant(3, 2.0);
    section.svm = ocsvm::fit_ocsvm(pts, 0.3, 0.9);

    ocsvm::save_section(section, dir.path() / "S1.svm.json");
    const ocsvm::SectionModel back = ocsvm::load_section(dir.path() / "S1.svm.json");
    CHECK(back.section_id == section.section_id);
    CHECK(back.baseline_exposure_m == section.baseline_exposure_m);
    CHECK(back.pls_ref == section.pls_ref);
    CHECK((back.scaler.means - section.scaler.means).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.svm.rho == section.svm.rho);
    CHECK(back.svm.gamma == section.svm.gamma);
    CHECK(back.svm.nu == section.svm.nu);
    CHECK((back.svm.alphas - section.svm.alphas).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.svm.support_vectors - section.svm.support_vectors).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng2(38);
    const Eigen::VectorXd probe = random_points(rng2, 1, 3).row(0).transpose();
    CHECK(ocsvm::decision_function(back.svm, probe) ==
          ocsvm::decision_function(section.svm, probe));
}
