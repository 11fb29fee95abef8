#include "freespan/ocsvm.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace freespan::ocsvm {

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    return std::exp(-gamma * (a - b).squaredNorm());
}

double gamma_heuristic(const Eigen::MatrixXd& latents) {
    const Eigen::Index k = latents.cols();
    Eigen::VectorXd vars(k);
    const Eigen::RowVectorXd mean = latents.colwise().mean();
    for (Eigen::Index c = 0; c < k; ++c)
        vars(c) = (latents.col(c).array() - mean(c)).square().mean();
    std::vector<double> v(vars.data(), vars.data() + vars.size());
    std::sort(v.begin(), v.end());
    const double median = v[v.size() / 2];
    return 1.0 / (static_cast<double>(k) * std::max(median, 1e-12));
}

OcsvmModel fit_ocsvm(const Eigen::MatrixXd& latents, double nu, double gamma,
                     const FitOptions& options) {
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("invalid nu");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    const Eigen::Index n = latents.rows();
    if (n < 1) throw std::invalid_argument("empty training set");

    const double c_bound = 1.0 / (nu * static_cast<double>(n));

    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        q(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double kij = std::exp(-gamma * (latents.row(i) - latents.row(j)).squaredNorm());
            q(i, j) = kij;
            q(j, i) = kij;
        }
    }

    // libsvm-style feasible start: fill the box from index 0 until mass 1
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    {
        double remaining = 1.0;
        for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
            const double take = std::min(c_bound, remaining);
            alpha(i) = take;
            remaining -= take;
        }
    }
    Eigen::VectorXd grad = q * alpha;

    const double bound_eps = 1e-12 * c_bound;
    double violation = 0.0;
    bool converged = false;
    for (long iter = 0; iter < options.max_iter; ++iter) {
        // maximal violating pair
        Eigen::Index up = -1, down = -1;
        double g_min = std::numeric_limits<double>::infinity();
        double g_max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (alpha(i) < c_bound - bound_eps && grad(i) < g_min) {
                g_min = grad(i);
                up = i;
            }
            if (alpha(i) > bound_eps && grad(i) > g_max) {
                g_max = grad(i);
                down = i;
            }
        }
        violation = (up >= 0 && down >= 0) ? g_max - g_min : 0.0;
        if (violation <= options.tol) {
            converged = true;
            break;
        }

        const double eta = q(up, up) + q(down, down) - 2.0 * q(up, down);
        double delta = eta > 1e-15 ? violation / eta : std::numeric_limits<double>::infinity();
        const double room_up = c_bound - alpha(up);
        const double room_down = alpha(down);
        delta = std::min({delta, room_up, room_down});

        if (delta == room_up) alpha(up) = c_bound;
        else alpha(up) += delta;
        if (delta == room_down) alpha(down) = 0.0;
        else alpha(down) -= delta;
        grad.noalias() += delta * (q.col(up) - q.col(down));
    }
    if (!converged)
        throw std::runtime_error("one-class SVM did not converge; KKT violation " +
                                 std::to_string(violation));

    // rho from free support vectors; fall back to the feasible interval midpoint
    double rho = 0.0;
    {
        double free_sum = 0.0;
        long free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (alpha(i) > bound_eps && alpha(i) < c_bound - bound_eps) {
                free_sum += grad(i);
                ++free_count;
            } else if (alpha(i) >= c_bound - bound_eps) {
                lo = std::max(lo, grad(i));
            } else {
                hi = std::min(hi, grad(i));
            }
        }
        if (free_count > 0) rho = free_sum / static_cast<double>(free_count);
        else if (std::isfinite(lo) && std::isfinite(hi)) rho = 0.5 * (lo + hi);
        else if (std::isfinite(lo)) rho = lo;
        else rho = hi;
    }

    OcsvmModel model;
    model.gamma = gamma;
    model.nu = nu;
    model.rho = rho;
    std::vector<long> sv;
    for (Eigen::Index i = 0; i < n; ++i)
        if (alpha(i) > bound_eps) sv.push_back(static_cast<long>(i));
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), latents.cols());
    model.alphas.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t i = 0; i < sv.size(); ++i) {
        model.support_vectors.row(static_cast<Eigen::Index>(i)) = latents.row(sv[i]);
        model.alphas(static_cast<Eigen::Index>(i)) = alpha(sv[i]);
    }
    model.sv_indices = std::move(sv);
    return model;
}

double decision_function(const OcsvmModel& model, const Eigen::VectorXd& t) {
    if (t.size() != model.support_vectors.cols())
        throw std::invalid_argument("dimension mismatch");
    double f = -model.rho;
    for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i)
        f += model.alphas(i) *
             std::exp(-model.gamma * (model.support_vectors.row(i).transpose() - t).squaredNorm());
    return f;
}

dasio::Label classify(const OcsvmModel& model, const Eigen::VectorXd& t) {
    return decision_function(model, t) < 0.0 ? dasio::Label::anomalous : dasio::Label::normal;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

nlohmann::json svm_json(const OcsvmModel& m) {
    nlohmann::json j;
    j["ocsvm_format"] = 1;
    j["rho"] = m.rho;
    j["gamma"] = m.gamma;
    j["nu"] = m.nu;
    j["alphas"] = vec_json(m.alphas);
    nlohmann::json svs = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i)
        svs.push_back(vec_json(m.support_vectors.row(i).transpose()));
    j["support_vectors"] = svs;
    return j;
}

OcsvmModel svm_from(const nlohmann::json& j) {
    if (j.at("ocsvm_format").get<int>() != 1)
        throw std::runtime_error("unsupported ocsvm_format");
    OcsvmModel m;
    m.rho = j.at("rho").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.nu = j.at("nu").get<double>();
    m.alphas = vec_from(j.at("alphas"));
    const auto& svs = j.at("support_vectors");
    const auto s = static_cast<Eigen::Index>(svs.size());
    if (s != m.alphas.size()) throw std::runtime_error("inconsistent ocsvm model file");
    const auto k = s > 0 ? static_cast<Eigen::Index>(svs.at(0).size()) : 0;
    m.support_vectors.resize(s, k);
    for (Eigen::Index i = 0; i < s; ++i)
        m.support_vectors.row(i) = vec_from(svs.at(i)).transpose();
    return m;
}

} // namespace

std::string section_to_json(const SectionModel& model) {
    nlohmann::json j;
    j["section_id"] = model.section_id;
    j["baseline_exposure_m"] = model.baseline_exposure_m;
    j["pls_ref"] = model.pls_ref;
    j["scaler"]["means"] = vec_json(model.scaler.means);
    j["scaler"]["stds"] = vec_json(model.scaler.stds);
    j["ocsvm"] = svm_json(model.svm);
    return j.dump(2) + "\n";
}

SectionModel section_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SectionModel m;
    m.section_id = j.at("section_id").get<std::string>();
    m.baseline_exposure_m = j.at("baseline_exposure_m").get<double>();
    m.pls_ref = j.at("pls_ref").get<std::string>();
    m.scaler.means = vec_from(j.at("scaler").at("means"));
    m.scaler.stds = vec_from(j.at("scaler").at("stds"));
    m.svm = svm_from(j.at("ocsvm"));
    return m;
}

void save_section(const SectionModel& model, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        const std::string text = section_to_json(model);
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    std::filesystem::rename(tmp, path);
}

SectionModel load_section(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return section_from_json(ss.str());
}

} // namespace freespan::ocsvm
