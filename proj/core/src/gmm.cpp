#include "domsel/gmm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "domsel/errors.hpp"
#include "domsel/rng.hpp"
#include "domsel/text.hpp"

namespace domsel {
namespace {

double squared_distance(const Eigen::MatrixXd& data, Eigen::Index row, const Eigen::MatrixXd& centers,
                        Eigen::Index c) {
    return (data.row(row) - centers.row(c)).squaredNorm();
}

Eigen::Index nearest_center(const Eigen::MatrixXd& data, Eigen::Index row, const Eigen::MatrixXd& centers,
                            Eigen::Index n_centers) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < n_centers; ++c) {
        const double d = squared_distance(data, row, centers, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& data, int k, Rng& rng) {
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd centers(k, data.cols());
    centers.row(0) = data.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(data, i, centers, 0);

    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = data.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), squared_distance(data, i, centers, c));
    }
    return centers;
}

std::vector<int> lloyd(const Eigen::MatrixXd& data, Eigen::MatrixXd& centers, int iterations) {
    const Eigen::Index n = data.rows();
    const Eigen::Index k = centers.rows();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    auto relabel = [&] {
        for (Eigen::Index i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(nearest_center(data, i, centers, k));
        }
    };
    relabel();
    for (int it = 0; it < iterations; ++it) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto c = labels[static_cast<std::size_t>(i)];
            sums.row(c) += data.row(i);
            counts(c) += 1.0;
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);  // empty: keep previous center
        }
        relabel();
    }
    return labels;
}

void m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp, double reg, GmmModel& g) {
    const Eigen::Index k = resp.cols();
    Eigen::VectorXd nk = resp.colwise().sum().transpose().array() + 10.0 * std::numeric_limits<double>::epsilon();
    g.weights = nk / nk.sum();
    g.means = (resp.transpose() * data).array().colwise() / nk.array();
    g.covariances.resize(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::MatrixXd diff = data.rowwise() - g.means.row(c);
        Eigen::MatrixXd weighted = diff.array().colwise() * resp.col(c).array();
        Eigen::MatrixXd cov = (diff.transpose() * weighted) / nk(c);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += reg;
        g.covariances[static_cast<std::size_t>(c)] = std::move(cov);
    }
}

// Returns the mean log-likelihood; fills resp (count x k).
double e_step(const GmmModel& g, const Eigen::MatrixXd& data, Eigen::MatrixXd& resp) {
    resp = weighted_log_densities(g, data);
    double total = 0.0;
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        const double mx = resp.row(i).maxCoeff();
        const double lse = mx + std::log((resp.row(i).array() - mx).exp().sum());
        resp.row(i) = (resp.row(i).array() - lse).exp();
        total += lse;
    }
    return total / static_cast<double>(data.rows());
}

void check_finite(const Eigen::MatrixXd& data) {
    if (!data.allFinite()) throw std::invalid_argument("fit_gmm: data has non-finite entries");
}

}  // namespace

Eigen::MatrixXd weighted_log_densities(const GmmModel& g, const Eigen::MatrixXd& data) {
    if (data.cols() != g.dim()) {
        throw std::invalid_argument("gmm: data dim " + std::to_string(data.cols()) + " != model dim " +
                                    std::to_string(g.dim()));
    }
    const Eigen::Index n = data.rows();
    const double d = static_cast<double>(data.cols());
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    Eigen::MatrixXd out(n, g.k);
    for (int c = 0; c < g.k; ++c) {
        Eigen::LLT<Eigen::MatrixXd> llt(g.covariances[static_cast<std::size_t>(c)]);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("gmm: covariance " + std::to_string(c) + " is not positive definite");
        }
        const Eigen::MatrixXd& l = llt.matrixLLT();
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        Eigen::MatrixXd diff_t = (data.rowwise() - g.means.row(c)).transpose();
        l.triangularView<Eigen::Lower>().solveInPlace(diff_t);
        const Eigen::VectorXd maha = diff_t.colwise().squaredNorm().transpose();
        out.col(c) = (std::log(g.weights(c)) - 0.5 * (d * log_2pi + log_det)) - 0.5 * maha.array();
    }
    return out;
}

GmmModel fit_gmm(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& options) {
    if (k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
    if (data.rows() < k) {
        throw std::invalid_argument("fit_gmm: " + std::to_string(data.rows()) + " rows < k=" + std::to_string(k));
    }
    if (options.max_iter < 1) throw std::invalid_argument("fit_gmm: max_iter must be >= 1");
    check_finite(data);

    Rng rng(seed);
    Eigen::MatrixXd centers = kmeans_plus_plus(data, k, rng);
    const auto labels = lloyd(data, centers, options.kmeans_iter);

    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(data.rows(), k);
    for (Eigen::Index i = 0; i < data.rows(); ++i) resp(i, labels[static_cast<std::size_t>(i)]) = 1.0;

    GmmModel g;
    g.k = k;
    g.seed = seed;
    m_step(data, resp, options.reg_covar, g);
    double ll = e_step(g, data, resp);
    g.log_likelihood_trace.push_back(ll);

    for (int it = 1; it <= options.max_iter; ++it) {
        m_step(data, resp, options.reg_covar, g);
        const double prev = ll;
        ll = e_step(g, data, resp);
        g.log_likelihood_trace.push_back(ll);
        g.n_iter = it;
        if (std::abs(ll - prev) < options.tol) {
            g.converged = true;
            break;
        }
    }
    return g;
}

GmmModel fit_gmm(const EmbeddingMatrix& m, int k, std::uint64_t seed, const GmmOptions& options) {
    return fit_gmm(m.to_eigen(), k, seed, options);
}

ClusterAssignment assign(const GmmModel& g, const Eigen::MatrixXd& data) {
    ClusterAssignment a;
    e_step(g, data, a.responsibilities);
    a.hard_labels.resize(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < a.responsibilities.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < g.k; ++c) {
            if (a.responsibilities(i, c) > a.responsibilities(i, best)) best = c;
        }
        a.hard_labels[static_cast<std::size_t>(i)] = best;
    }
    return a;
}

ClusterAssignment assign(const GmmModel& g, const EmbeddingMatrix& m) {
    if (static_cast<Eigen::Index>(m.dim()) != g.dim()) {
        throw std::invalid_argument("assign: matrix dim " + std::to_string(m.dim()) + " != model dim " +
                                    std::to_string(g.dim()));
    }
    return assign(g, m.to_eigen());
}

double mean_log_likelihood(const GmmModel& g, const Eigen::MatrixXd& data) {
    Eigen::MatrixXd resp;
    return e_step(g, data, resp);
}

namespace {

constexpr char kGmmMagic[4] = {'G', 'M', 'M', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_gmm(const GmmModel& g, const std::filesystem::path& path) {
    const nlohmann::json header = {
        {"k", g.k},
        {"dim", g.dim()},
        {"seed", g.seed},
        {"weights", std::vector<double>(g.weights.begin(), g.weights.end())},
        {"log_likelihood_trace", g.log_likelihood_trace},
        {"converged", g.converged},
        {"n_iter", g.n_iter},
    };
    const std::string h = header.dump();
    std::string buf(kGmmMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(h.size()));
    buf += h;
    for (Eigen::Index c = 0; c < g.k; ++c) {
        for (Eigen::Index j = 0; j < g.dim(); ++j) put_f64(buf, g.means(c, j));
    }
    for (const auto& cov : g.covariances) {
        for (Eigen::Index r = 0; r < cov.rows(); ++r) {
            for (Eigen::Index j = 0; j < cov.cols(); ++j) put_f64(buf, cov(r, j));
        }
    }
    write_file(path, buf);
}

GmmModel read_gmm(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < 8 || std::memcmp(buf.data(), kGmmMagic, 4) != 0) {
        throw FormatError(path.string() + ": bad magic, expected GMM1");
    }
    std::uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[4 + i])) << (8 * i);
    if (buf.size() < 8ull + hlen) throw FormatError(path.string() + ": truncated header");

    GmmModel g;
    Eigen::Index dim = 0;
    try {
        const auto h = nlohmann::json::parse(buf.substr(8, hlen));
        g.k = h.at("k").get<int>();
        dim = h.at("dim").get<Eigen::Index>();
        g.seed = h.at("seed").get<std::uint64_t>();
        const auto w = h.at("weights").get<std::vector<double>>();
        g.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        g.log_likelihood_trace = h.at("log_likelihood_trace").get<std::vector<double>>();
        g.converged = h.at("converged").get<bool>();
        g.n_iter = h.at("n_iter").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad header: " + e.what());
    }
    if (g.k < 1 || dim < 1 || g.weights.size() != g.k) throw FormatError(path.string() + ": inconsistent header");
    const std::size_t expected = 8ull + hlen + 8ull * static_cast<std::size_t>(g.k) *
                                                   static_cast<std::size_t>(dim) * static_cast<std::size_t>(1 + dim);
    if (buf.size() != expected) throw FormatError(path.string() + ": payload size does not match header");

    const char* p = buf.data() + 8 + hlen;
    g.means.resize(g.k, dim);
    for (Eigen::Index c = 0; c < g.k; ++c) {
        for (Eigen::Index j = 0; j < dim; ++j, p += 8) g.means(c, j) = get_f64(p);
    }
    g.covariances.assign(static_cast<std::size_t>(g.k), Eigen::MatrixXd(dim, dim));
    for (auto& cov : g.covariances) {
        for (Eigen::Index r = 0; r < dim; ++r) {
            for (Eigen::Index j = 0; j < dim; ++j, p += 8) cov(r, j) = get_f64(p);
        }
    }
    return g;
}

}  // namespace domsel
