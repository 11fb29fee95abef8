#include "freespan/pls.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace freespan::pls {

namespace {

constexpr double kStdFloor = 1e-12;
constexpr double kCovarianceFloor = 1e-12;

struct Standardized {
    Eigen::MatrixXd Xc;
    Eigen::VectorXd yc;
    Eigen::VectorXd x_mean, x_std;
    double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Standardized s;
    s.x_mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - s.x_mean.transpose();
    s.x_std = centered.array().square().colwise().mean().sqrt();
    s.x_std = s.x_std.cwiseMax(kStdFloor);
    centered.array().rowwise() /= s.x_std.transpose().array();
    s.Xc = std::move(centered);
    s.y_mean = y.mean();
    s.yc = y.array() - s.y_mean;
    return s;
}

// Scores for new (standardized) data via deflation replay; equivalent to
// multiplying by W_star but usable before W_star exists.
Eigen::MatrixXd scores_by_deflation(const Eigen::MatrixXd& W, const Eigen::MatrixXd& P,
                                    Eigen::MatrixXd Xs) {
    const Eigen::Index k = W.cols();
    Eigen::MatrixXd T(Xs.rows(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
        T.col(c) = Xs * W.col(c);
        Xs.noalias() -= T.col(c) * P.col(c).transpose();
    }
    return T;
}

} // namespace

PlsModel fit_pls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n != y.size()) throw std::invalid_argument("X and y row count mismatch");
    if (n < 2) throw std::invalid_argument("need at least 2 samples");
    const Eigen::Index k_cap = std::min<Eigen::Index>(d, n - 1);
    if (k < 1 || k > k_cap) throw std::invalid_argument("invalid component count");

    Standardized s = standardize(X, y);
    if ((s.yc.array().abs() < kCovarianceFloor).all())
        throw std::runtime_error("degenerate target");

    PlsModel model;
    model.x_mean = s.x_mean;
    model.x_std = s.x_std;
    model.y_mean = s.y_mean;
    model.W.resize(d, k);
    model.P.resize(d, k);
    model.q.resize(k);

    Eigen::MatrixXd Xd = s.Xc;
    Eigen::VectorXd yd = s.yc;
    int achieved = 0;
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd v = Xd.transpose() * yd;
        const double nv = v.norm();
        if (nv < kCovarianceFloor) {
            model.truncated = true;
            break;
        }
        const Eigen::VectorXd w = v / nv;
        const Eigen::VectorXd t = Xd * w;
        const double tt = t.squaredNorm();
        if (tt <= 0.0) {
            model.truncated = true;
            break;
        }
        const Eigen::VectorXd p = Xd.transpose() * t / tt;
        const double qk = yd.dot(t) / tt;
        Xd.noalias() -= t * p.transpose();
        yd.noalias() -= qk * t;
        model.W.col(c) = w;
        model.P.col(c) = p;
        model.q(c) = qk;
        ++achieved;
    }
    if (achieved == 0) throw std::runtime_error("no informative direction in X");
    model.W.conservativeResize(d, achieved);
    model.P.conservativeResize(d, achieved);
    model.q.conservativeResize(achieved);

    const Eigen::MatrixXd ptw = model.P.transpose() * model.W;
    model.W_star = model.W * ptw.inverse();
    return model;
}

Eigen::MatrixXd transform(const PlsModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.dim()) throw std::invalid_argument("dimension mismatch");
    Eigen::MatrixXd Xs = X.rowwise() - model.x_mean.transpose();
    Xs.array().rowwise() /= model.x_std.transpose().array();
    return Xs * model.W_star;
}

Eigen::VectorXd predict(const PlsModel& model, const Eigen::MatrixXd& X) {
    return (transform(model, X) * model.q).array() + model.y_mean;
}

int select_components(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k_max,
                      int n_folds) {
    const Eigen::Index n = X.rows();
    if (n_folds < 2) throw std::invalid_argument("need at least 2 folds");
    if (n < n_folds) throw std::invalid_argument("fewer samples than folds");

    // round-robin fold assignment keeps the split deterministic
    Eigen::Index min_train = n;
    for (int f = 0; f < n_folds; ++f) {
        Eigen::Index held = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i % n_folds == f) ++held;
        min_train = std::min(min_train, n - held);
    }
    const int k_cap = static_cast<int>(
        std::min<Eigen::Index>({static_cast<Eigen::Index>(k_max), X.cols(), min_train - 1}));
    if (k_cap < 1) throw std::invalid_argument("no feasible component count");

    std::vector<double> errs(static_cast<std::size_t>(k_cap), 0.0);
    for (int f = 0; f < n_folds; ++f) {
        std::vector<Eigen::Index> train_idx, test_idx;
        for (Eigen::Index i = 0; i < n; ++i)
            (i % n_folds == f ? test_idx : train_idx).push_back(i);

        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_idx.size()), X.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_idx.size()));
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_idx[i]);
            ytr(static_cast<Eigen::Index>(i)) = y(train_idx[i]);
        }
        Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test_idx.size()), X.cols());
        Eigen::VectorXd yte(static_cast<Eigen::Index>(test_idx.size()));
        for (std::size_t i = 0; i < test_idx.size(); ++i) {
            Xte.row(static_cast<Eigen::Index>(i)) = X.row(test_idx[i]);
            yte(static_cast<Eigen::Index>(i)) = y(test_idx[i]);
        }

        const PlsModel m = fit_pls(Xtr, ytr, k_cap);
        Eigen::MatrixXd Xs = Xte.rowwise() - m.x_mean.transpose();
        Xs.array().rowwise() /= m.x_std.transpose().array();
        const Eigen::MatrixXd T = scores_by_deflation(m.W, m.P, Xs);

        // cumulative predictions: adding component c contributes q_c * t_c
        Eigen::VectorXd pred = Eigen::VectorXd::Constant(yte.size(), m.y_mean);
        for (int c = 0; c < k_cap; ++c) {
            if (c < m.k()) pred += m.q(c) * T.col(c);
            errs[static_cast<std::size_t>(c)] += (pred - yte).squaredNorm();
        }
    }

    int best_k = 1;
    double best_err = errs[0];
    for (int c = 1; c < k_cap; ++c) {
        if (errs[static_cast<std::size_t>(c)] < best_err) {
            best_err = errs[static_cast<std::size_t>(c)];
            best_k = c + 1;
        }
    }
    return best_k;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

} // namespace

std::string pls_to_json(const PlsModel& model) {
    nlohmann::json j;
    j["pls_format"] = 1;
    j["k"] = model.k();
    j["x_mean"] = vector_to_json(model.x_mean);
    j["x_std"] = vector_to_json(model.x_std);
    j["y_mean"] = model.y_mean;
    j["w"] = matrix_to_json(model.W);
    j["p"] = matrix_to_json(model.P);
    j["w_star"] = matrix_to_json(model.W_star);
    j["q"] = vector_to_json(model.q);
    j["truncated"] = model.truncated;
    return j.dump(2) + "\n";
}

PlsModel pls_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("pls_format").get<int>() != 1)
        throw std::runtime_error("unsupported pls_format");
    PlsModel m;
    m.x_mean = vector_from_json(j.at("x_mean"));
    m.x_std = vector_from_json(j.at("x_std"));
    m.y_mean = j.at("y_mean").get<double>();
    m.W = matrix_from_json(j.at("w"));
    m.P = matrix_from_json(j.at("p"));
    m.W_star = matrix_from_json(j.at("w_star"));
    m.q = vector_from_json(j.at("q"));
    m.truncated = j.at("truncated").get<bool>();
    if (m.W.cols() != m.q.size() || m.P.cols() != m.q.size() || m.W_star.cols() != m.q.size())
        throw std::runtime_error("inconsistent pls model file");
    return m;
}

void save_pls(const PlsModel& model, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        const std::string text = pls_to_json(model);
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    std::filesystem::rename(tmp, path);
}

PlsModel load_pls(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return pls_from_json(ss.str());
}

} // namespace freespan::pls
