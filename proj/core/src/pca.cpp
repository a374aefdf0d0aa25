#include "domsel/pca.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "domsel/errors.hpp"

namespace domsel {

PcaModel fit_pca(const EmbeddingMatrix& m, Eigen::Index n_components) {
    if (m.count() < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");
    const auto count = static_cast<Eigen::Index>(m.count());
    const auto dim = static_cast<Eigen::Index>(m.dim());
    if (n_components < 1 || n_components > std::min(count, dim)) {
        throw std::invalid_argument("fit_pca: n_components " + std::to_string(n_components) +
                                    " outside [1, " + std::to_string(std::min(count, dim)) + "]");
    }

    Eigen::MatrixXd x = m.to_eigen();
    PcaModel p;
    p.mean = x.colwise().mean().transpose();
    x.rowwise() -= p.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const Eigen::MatrixXd& v = svd.matrixV();
    p.components = v.leftCols(n_components).transpose();
    p.singular_values = svd.singularValues().head(n_components);

    for (Eigen::Index c = 0; c < p.components.rows(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double a = std::abs(p.components(c, j));
            if (a > best) {
                best = a;
                arg = j;
            }
        }
        if (p.components(c, arg) < 0) p.components.row(c) *= -1.0;
    }
    return p;
}

Eigen::MatrixXd project(const PcaModel& p, const EmbeddingMatrix& m) {
    if (static_cast<Eigen::Index>(m.dim()) != p.dim()) {
        throw std::invalid_argument("apply_pca: matrix dim " + std::to_string(m.dim()) +
                                    " != model dim " + std::to_string(p.dim()));
    }
    Eigen::MatrixXd x = m.to_eigen();
    x.rowwise() -= p.mean.transpose();
    return x * p.components.transpose();
}

EmbeddingMatrix apply_pca(const PcaModel& p, const EmbeddingMatrix& m) {
    return EmbeddingMatrix::from_eigen(project(p, m), m.ids());
}

nlohmann::json to_json(const PcaModel& p) {
    nlohmann::json comps = nlohmann::json::array();
    for (Eigen::Index c = 0; c < p.components.rows(); ++c) {
        std::vector<double> row(p.components.row(c).begin(), p.components.row(c).end());
        comps.push_back(row);
    }
    return {
        {"dim", p.dim()},
        {"n_components", p.n_components()},
        {"mean", std::vector<double>(p.mean.begin(), p.mean.end())},
        {"singular_values", std::vector<double>(p.singular_values.begin(), p.singular_values.end())},
        {"components", comps},
    };
}

PcaModel pca_from_json(const nlohmann::json& j) {
    try {
        PcaModel p;
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto sv = j.at("singular_values").get<std::vector<double>>();
        const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
        p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        p.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
        p.components.resize(static_cast<Eigen::Index>(comps.size()), p.mean.size());
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (comps[c].size() != mean.size()) throw FormatError("pca: component length mismatch");
            for (std::size_t d = 0; d < mean.size(); ++d) {
                p.components(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = comps[c][d];
            }
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("pca model: ") + e.what());
    }
}

}  // namespace domsel
