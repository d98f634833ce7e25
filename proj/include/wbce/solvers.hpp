#pragma once

#include "wbce/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wbce {

struct SparseSolution {
    std::vector<long> support;
    std::vector<cplx> coefficients;
    std::vector<double> residual_norms;
    long iterations = 0;
    bool converged = true;
    std::vector<double> objective;

    cvec dense(Eigen::Index n) const
    {
        cvec x = cvec::Zero(n);
        for (std::size_t i = 0; i < support.size(); ++i) {
            x[support[i]] = coefficients[i];
        }
        return x;
    }
};

inline cvec reconstruct(const cmat& A, const SparseSolution& sol)
{
    cvec out = cvec::Zero(A.rows());
    for (std::size_t i = 0; i < sol.support.size(); ++i) {
        out += A.col(sol.support[i]) * sol.coefficients[i];
    }
    return out;
}

inline cvec least_squares_on_support(const cmat& A, const std::vector<long>& support, const cvec& z)
{
    if (z.size() != A.rows()) {
        throw std::invalid_argument("least_squares_on_support: z length does not match A rows");
    }
    if (support.empty()) {
        return cvec();
    }
    cmat As(A.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        As.col(static_cast<Eigen::Index>(i)) = A.col(support[i]);
    }
    Eigen::ColPivHouseholderQR<cmat> qr(As);
    qr.setThreshold(1e-10);
    if (qr.rank() < As.cols()) {
        throw std::runtime_error("least_squares_on_support: singular normal equations (support columns are dependent)");
    }
    return qr.solve(z);
}

inline Eigen::VectorXd column_norms(const cmat& A)
{
    return A.colwise().norm().transpose();
}

/*
 * Orthogonal matching pursuit with a full least-squares refit on the support
 * after each selection. Returns one snapshot per iteration.
 */
inline std::vector<SparseSolution> omp_path(const cmat& A, const cvec& z, long max_iters, double residual_tol = 0.0)
{
    if (z.size() != A.rows()) {
        throw std::invalid_argument("omp: z length does not match dictionary rows");
    }
    if (max_iters < 0 || max_iters > A.cols()) {
        throw std::invalid_argument("omp: max_iters must lie in [0, number of columns]");
    }
    const Eigen::VectorXd norms = column_norms(A);
    std::vector<SparseSolution> path;
    SparseSolution cur;
    cvec r = z;
    std::vector<char> used(static_cast<std::size_t>(A.cols()), 0);
    for (long it = 1; it <= max_iters; ++it) {
        if (r.norm() <= residual_tol) {
            break;
        }
        const cvec corr = A.adjoint() * r;
        long best = -1;
        double best_v = -1.0;
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            if (used[static_cast<std::size_t>(j)] || norms[j] <= 0.0) {
                continue;
            }
            const double v = std::abs(corr[j]) / norms[j];
            if (v > best_v) {
                best_v = v;
                best = static_cast<long>(j);
            }
        }
        if (best < 0) {
            break;
        }
        used[static_cast<std::size_t>(best)] = 1;
        cur.support.push_back(best);
        cvec c;
        try {
            c = least_squares_on_support(A, cur.support, z);
        } catch (const std::runtime_error&) {
            std::ostringstream os;
            os << "omp: rank-deficient support at iteration " << it << " (column " << best << ")";
            throw std::runtime_error(os.str());
        }
        cur.coefficients.assign(c.data(), c.data() + c.size());
        r = z - reconstruct(A, cur);
        const double rn = r.norm();
        if (!cur.residual_norms.empty()) {
            // LS on a nested support cannot increase the residual; clamp round-off.
            cur.residual_norms.push_back(std::min(rn, cur.residual_norms.back()));
        } else {
            cur.residual_norms.push_back(rn);
        }
        cur.iterations = it;
        path.push_back(cur);
    }
    return path;
}

inline SparseSolution omp(const cmat& A, const cvec& z, long max_iters, double residual_tol = 0.0)
{
    auto path = omp_path(A, z, max_iters, residual_tol);
    if (path.empty()) {
        SparseSolution s;
        s.residual_norms.push_back(z.norm());
        return s;
    }
    return path.back();
}

inline SparseSolution omp(const Dictionary& D, const cvec& z, long max_iters, double residual_tol = 0.0)
{
    return omp(D.columns, z, max_iters, residual_tol);
}

namespace detail {

// Largest eigenvalue of B^H B by power iteration from a fixed start.
inline double power_norm_sq(const cmat& B, int iters)
{
    cvec v = cvec::Ones(B.cols()) / std::sqrt(static_cast<double>(B.cols()));
    double lam = 0.0;
    for (int i = 0; i < iters; ++i) {
        cvec w = B.adjoint() * (B * v);
        lam = w.norm();
        if (lam <= 0.0) {
            return 0.0;
        }
        v = w / lam;
    }
    return lam;
}

inline cvec soft_threshold(const cvec& x, double tau)
{
    cvec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double m = std::abs(x[i]);
        out[i] = m > tau ? x[i] * ((m - tau) / m) : cplx(0.0, 0.0);
    }
    return out;
}

inline double l1(const cvec& x)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        s += std::abs(x[i]);
    }
    return s;
}

} // namespace detail

struct BasisPursuitOptions {
    int power_iterations = 20;
    // Safety factor on the power-iteration Lipschitz estimate.
    double lipschitz_margin = 1.01;
    const cvec* warm_start = nullptr;
};

/*
 * min over phi of lambda |phi|_1 + 1/2 ||z - A_n phi||^2, A_n = A with unit
 * columns, solved by monotone FISTA; theta = phi / column norm.
 */
inline SparseSolution basis_pursuit(const cmat& A, const cvec& z, double lambda, long max_iters, double tol,
                                    const BasisPursuitOptions& opt = {})
{
    if (lambda < 0.0) {
        throw std::invalid_argument("basis_pursuit: lambda must be >= 0");
    }
    if (z.size() != A.rows()) {
        throw std::invalid_argument("basis_pursuit: z length does not match dictionary rows");
    }
    const Eigen::VectorXd norms = column_norms(A);
    Eigen::VectorXd inv(norms.size());
    for (Eigen::Index j = 0; j < norms.size(); ++j) {
        inv[j] = norms[j] > 0.0 ? 1.0 / norms[j] : 0.0;
    }
    const cmat An = A * inv.asDiagonal();
    const double L = std::max(detail::power_norm_sq(An, opt.power_iterations) * opt.lipschitz_margin, 1e-300);
    auto objective = [&](const cvec& phi, double& rnorm) {
        const cvec r = z - An * phi;
        rnorm = r.norm();
        return lambda * detail::l1(phi) + 0.5 * r.squaredNorm();
    };
    cvec x = cvec::Zero(A.cols());
    if (opt.warm_start != nullptr && opt.warm_start->size() == A.cols()) {
        x = opt.warm_start->cwiseProduct(norms.cast<cplx>());
    }
    cvec x_prev = x;
    cvec y = x;
    double t = 1.0;
    double rn = 0.0;
    double f = objective(x, rn);
    SparseSolution sol;
    sol.converged = false;
    sol.objective.push_back(f);
    sol.residual_norms.push_back(rn);
    for (long it = 1; it <= max_iters; ++it) {
        const cvec grad = An.adjoint() * (An * y - z);
        const cvec cand = detail::soft_threshold(y - grad / L, lambda / L);
        double rn_c = 0.0;
        const double f_c = objective(cand, rn_c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        x_prev = x;
        const double f_prev = f;
        if (f_c <= f) {
            x = cand;
            f = f_c;
            rn = rn_c;
        }
        y = x + (t / t_next) * (cand - x) + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;
        sol.objective.push_back(f);
        sol.residual_norms.push_back(rn);
        sol.iterations = it;
        const double change = std::abs(f_prev - f) / std::max(std::abs(f), 1e-300);
        if (f_c <= f_prev && change < tol) {
            sol.converged = true;
            break;
        }
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x[j] != cplx(0.0, 0.0)) {
            sol.support.push_back(static_cast<long>(j));
            sol.coefficients.push_back(x[j] * inv[j]);
        }
    }
    return sol;
}

inline SparseSolution basis_pursuit(const Dictionary& D, const cvec& z, double lambda, long max_iters, double tol)
{
    return basis_pursuit(D.columns, z, lambda, max_iters, tol);
}

// Largest |<z, a_j>| over unit-normalised columns; lambda above this gives an empty support.
inline double lambda_max(const cmat& A, const cvec& z)
{
    const Eigen::VectorXd norms = column_norms(A);
    const cvec c = A.adjoint() * z;
    double m = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (norms[j] > 0.0) {
            m = std::max(m, std::abs(c[j]) / norms[j]);
        }
    }
    return m;
}

struct FbmpOptions {
    // Upper limit on active columns; 0 selects mean + 4 standard deviations of the prior count.
    long max_active = 0;
};

/*
 * FBMP-style search under a Bernoulli-Gaussian prior:
 *   theta_j = s_j x_j, s_j ~ Bernoulli(p_active), x_j ~ CN(0, gain_var), noise ~ CN(0, noise_var).
 * Stage k keeps the `search_breadth` best supports of size k, grown by one
 * column from the previous stage. The metric is log p(z | S) + log p(S).
 * Returns the conditional-mean coefficients of the best support seen.
 */
inline SparseSolution fbmp(const cmat& A, const cvec& z, double p_active, double noise_var, double gain_var,
                           long search_breadth, const FbmpOptions& opt = {})
{
    if (!(p_active > 0.0 && p_active < 1.0)) {
        throw std::invalid_argument("fbmp: p_active must lie in (0, 1)");
    }
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("fbmp: noise_var must be positive (posterior undefined at zero noise)");
    }
    if (!(gain_var > 0.0)) {
        throw std::invalid_argument("fbmp: gain_var must be positive");
    }
    if (search_breadth < 1) {
        throw std::invalid_argument("fbmp: search_breadth must be >= 1");
    }
    if (z.size() != A.rows()) {
        throw std::invalid_argument("fbmp: z length does not match dictionary rows");
    }
    const long n = static_cast<long>(A.cols());
    const double np = p_active * static_cast<double>(n);
    long smax = opt.max_active > 0
        ? opt.max_active
        : static_cast<long>(std::ceil(np + 4.0 * std::sqrt(np * (1.0 - p_active)))) + 1;
    smax = std::min({smax, n, static_cast<long>(A.rows())});

    const double ratio = noise_var / gain_var;
    const double log_prior = std::log(p_active / (1.0 - p_active));
    const cvec u = A.adjoint() * z;
    const Eigen::VectorXd kdiag = A.colwise().squaredNorm().transpose();

    std::map<long, cvec> gram_cols;
    auto gram_col = [&](long j) -> const cvec& {
        auto it = gram_cols.find(j);
        if (it == gram_cols.end()) {
            it = gram_cols.emplace(j, A.adjoint() * A.col(j)).first;
        }
        return it->second;
    };

    struct Node {
        std::vector<long> support;
        double metric = 0.0;
    };

    // Q = (K_SS + ratio I)^{-1} for a support, with the metric increments for every candidate column.
    auto expand = [&](const Node& node, std::vector<std::pair<double, long>>& out) {
        const long s = static_cast<long>(node.support.size());
        out.clear();
        cvec proj_u;     // K_{:,S} Q u_S
        Eigen::VectorXd quad; // diag(K_{:,S} Q K_{S,:})
        if (s == 0) {
            proj_u = cvec::Zero(n);
            quad = Eigen::VectorXd::Zero(n);
        } else {
            cmat Ks(n, s);
            cvec us(s);
            for (long i = 0; i < s; ++i) {
                Ks.col(i) = gram_col(node.support[static_cast<std::size_t>(i)]);
                us[i] = u[node.support[static_cast<std::size_t>(i)]];
            }
            cmat Kss(s, s);
            for (long i = 0; i < s; ++i) {
                Kss.row(i) = Ks.row(node.support[static_cast<std::size_t>(i)]);
            }
            Kss.diagonal().array() += ratio;
            Eigen::LLT<cmat> llt(Kss);
            const cvec qu = llt.solve(us);
            proj_u = Ks * qu;
            const cmat X = llt.solve(Ks.adjoint()); // Q K_{S,:}
            quad = (Ks.array() * X.transpose().array()).rowwise().sum().real();
        }
        std::vector<char> in(static_cast<std::size_t>(n), 0);
        for (long j : node.support) {
            in[static_cast<std::size_t>(j)] = 1;
        }
        for (long j = 0; j < n; ++j) {
            if (in[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double sj = kdiag[j] + ratio - quad[j];
            if (!(sj > 0.0)) {
                continue;
            }
            const double num = std::norm(u[j] - proj_u[j]);
            const double inc = num / (noise_var * sj) - std::log(sj / ratio) + log_prior;
            out.emplace_back(node.metric + inc, j);
        }
    };

    std::vector<Node> frontier{Node{}};
    Node best = frontier.front();
    long stages = 0;
    std::vector<std::pair<double, long>> cand;
    for (long stage = 1; stage <= smax; ++stage) {
        std::vector<Node> children;
        for (const auto& node : frontier) {
            expand(node, cand);
            std::partial_sort(cand.begin(), cand.begin() + std::min<std::size_t>(cand.size(), search_breadth),
                              cand.end(), [](const auto& x, const auto& y) {
                                  return x.first > y.first || (x.first == y.first && x.second < y.second);
                              });
            const std::size_t keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(search_breadth));
            for (std::size_t k = 0; k < keep; ++k) {
                Node c;
                c.support = node.support;
                c.support.push_back(cand[k].second);
                c.metric = cand[k].first;
                children.push_back(std::move(c));
            }
        }
        if (children.empty()) {
            break;
        }
        std::sort(children.begin(), children.end(), [](const Node& x, const Node& y) {
            if (x.metric != y.metric) {
                return x.metric > y.metric;
            }
            return x.support < y.support;
        });
        std::vector<Node> next;
        std::set<std::vector<long>> seen;
        for (auto& c : children) {
            std::vector<long> key = c.support;
            std::sort(key.begin(), key.end());
            if (seen.insert(key).second) {
                next.push_back(std::move(c));
                if (static_cast<long>(next.size()) == search_breadth) {
                    break;
                }
            }
        }
        frontier = std::move(next);
        stages = stage;
        if (frontier.front().metric > best.metric) {
            best = frontier.front();
        }
    }

    SparseSolution sol;
    sol.iterations = stages;
    sol.support = best.support;
    if (!best.support.empty()) {
        const long s = static_cast<long>(best.support.size());
        cmat As(A.rows(), s);
        cvec us(s);
        for (long i = 0; i < s; ++i) {
            As.col(i) = A.col(best.support[static_cast<std::size_t>(i)]);
            us[i] = u[best.support[static_cast<std::size_t>(i)]];
        }
        cmat Kss = As.adjoint() * As;
        Kss.diagonal().array() += ratio;
        const cvec c = Kss.llt().solve(us);
        sol.coefficients.assign(c.data(), c.data() + c.size());
    }
    sol.residual_norms.push_back((z - reconstruct(A, sol)).norm());
    return sol;
}

inline SparseSolution fbmp(const Dictionary& D, const cvec& z, double p_active, double noise_var, double gain_var,
                           long search_breadth)
{
    return fbmp(D.columns, z, p_active, noise_var, gain_var, search_breadth);
}

} // namespace wbce
