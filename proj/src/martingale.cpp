#include "spdelab/martingale.hpp"

#include <cmath>
#include <sstream>

#include "spdelab/errors.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

BasisMotions BasisMotions::from_noise(const NoiseSheet& noise) {
    const Grid& g = noise.grid();
    BasisMotions bm;
    bm.grid = g;
    bm.w = Eigen::MatrixXd::Zero(g.nt + 1, g.nx);
    const double inv_sqrt_dx = 1.0 / std::sqrt(g.dx);
    // e_k = indicator of cell k normalized in L2[0,D]; pairing with the sheet
    // gives increments dW[i][k]/sqrt(dx) of variance dt
    for (int i = 0; i < g.nt; ++i)
        for (int k = 0; k < g.nx; ++k)
            bm.w(i + 1, k) = bm.w(i, k) + noise.at(i, k) * inv_sqrt_dx;
    return bm;
}

double MartingaleProjection::integrand(int i, int k, const BasisMotions& motions) const {
    const Eigen::MatrixXd& c = coef[i];
    const double wk = motions.at(i, k);
    double acc = 0.0;
    double pw = 1.0;
    for (int p = 0; p < c.cols(); ++p) {
        acc += c(k, p) * pw;
        pw *= wk;
    }
    return acc;
}

MartingaleProjection project_martingale(std::span<const std::vector<double>> m_paths,
                                        std::span<const BasisMotions> motions,
                                        const ProjectionOptions& opts) {
    if (m_paths.size() != motions.size() || m_paths.empty())
        throw ConfigError("project_martingale: need matched martingale and motion replicas");
    const Grid& g = motions.front().grid;
    const int nt = g.nt;
    const int nb = opts.basis_size;
    const int np = opts.poly_degree + 1;
    if (nb < 1 || nb > g.nx) throw ConfigError("project_martingale: basis size out of range");
    const std::size_t n_rep = m_paths.size();
    const int n_cols = nb * np;
    if (n_rep < static_cast<std::size_t>(4 * n_cols))
        throw ConfigError("project_martingale: replica count too small for the feature set");

    MartingaleProjection proj;
    proj.opts = opts;
    proj.grid = g;
    proj.coef.resize(nt);

    Eigen::MatrixXd design(n_rep, n_cols);
    Eigen::VectorXd target(n_rep);
    for (int i = 0; i < nt; ++i) {
        for (std::size_t r = 0; r < n_rep; ++r) {
            target[static_cast<Eigen::Index>(r)] = m_paths[r][i + 1] - m_paths[r][i];
            const BasisMotions& bm = motions[r];
            for (int k = 0; k < nb; ++k) {
                const double dwk = bm.increment(i, k);
                double pw = 1.0;
                const double wk = bm.at(i, k);
                for (int p = 0; p < np; ++p) {
                    design(static_cast<Eigen::Index>(r), k * np + p) = pw * dwk;
                    pw *= wk;
                }
            }
        }
        // drop structurally empty columns (e.g. W^p features at t = 0)
        std::vector<int> active;
        double max_norm = 0.0;
        Eigen::VectorXd norms(n_cols);
        for (int c = 0; c < n_cols; ++c) {
            norms[c] = design.col(c).norm();
            max_norm = std::max(max_norm, norms[c]);
        }
        for (int c = 0; c < n_cols; ++c)
            if (norms[c] > 1e-12 * std::max(1.0, max_norm)) active.push_back(c);

        Eigen::MatrixXd sub(n_rep, active.size());
        for (std::size_t c = 0; c < active.size(); ++c) sub.col(c) = design.col(active[c]);

        Eigen::MatrixXd c_mat = Eigen::MatrixXd::Zero(nb, np);
        if (!active.empty()) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
            if (qr.rank() < static_cast<Eigen::Index>(active.size())) {
                std::ostringstream msg;
                msg << "project_martingale: rank-deficient regression at step " << i << " (rank "
                    << qr.rank() << " of " << active.size() << ")";
                throw NumericError(msg.str());
            }
            const Eigen::VectorXd beta = qr.solve(target);
            for (std::size_t c = 0; c < active.size(); ++c)
                c_mat(active[c] / np, active[c] % np) = beta[static_cast<Eigen::Index>(c)];
        }
        proj.coef[i] = std::move(c_mat);
    }
    return proj;
}

std::vector<double> reconstruct(const MartingaleProjection& proj, const BasisMotions& motions) {
    return reconstruct_with(
        [&proj](int i, int k, const BasisMotions& bm) { return proj.integrand(i, k, bm); },
        proj.opts.basis_size, motions);
}

std::vector<double> reconstruct_with(
    const std::function<double(int i, int k, const BasisMotions&)>& integrand,
    int basis_size, const BasisMotions& motions) {
    const Grid& g = motions.grid;
    std::vector<double> m(g.nt + 1, 0.0);
    for (int i = 0; i < g.nt; ++i) {
        double inc = 0.0;
        for (int k = 0; k < basis_size; ++k)
            inc += integrand(i, k, motions) * motions.increment(i, k);
        m[i + 1] = m[i] + inc;
    }
    return m;
}

MartingaleTestResult martingale_increment_test(std::span<const std::vector<double>> m_paths,
                                               std::span<const BasisMotions> motions,
                                               int basis_size, double alpha) {
    if (m_paths.size() != motions.size() || m_paths.empty())
        throw ConfigError("martingale_increment_test: need matched replicas");
    const Grid& g = motions.front().grid;
    const int nt = g.nt;
    const int n_feat = basis_size + 1; // intercept + W_k(t_i)
    const std::size_t rows = m_paths.size() * static_cast<std::size_t>(nt);

    Eigen::MatrixXd design(rows, n_feat);
    Eigen::VectorXd target(rows);
    std::size_t row = 0;
    for (std::size_t r = 0; r < m_paths.size(); ++r) {
        for (int i = 0; i < nt; ++i, ++row) {
            target[static_cast<Eigen::Index>(row)] = m_paths[r][i + 1] - m_paths[r][i];
            design(static_cast<Eigen::Index>(row), 0) = 1.0;
            for (int k = 0; k < basis_size; ++k)
                design(static_cast<Eigen::Index>(row), k + 1) = motions[r].at(i, k);
        }
    }

    const Eigen::MatrixXd xtx = design.transpose() * design;
    const Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(n_feat, n_feat));
    const Eigen::VectorXd beta = xtx_inv * (design.transpose() * target);
    const Eigen::VectorXd resid = target - design * beta;

    // HC0 sandwich covariance
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(n_feat, n_feat);
    for (std::size_t i = 0; i < rows; ++i) {
        const Eigen::VectorXd xi = design.row(static_cast<Eigen::Index>(i)).transpose();
        const double e = resid[static_cast<Eigen::Index>(i)];
        meat.noalias() += xi * xi.transpose() * (e * e);
    }
    const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
    const double chi2 = beta.transpose() * cov.ldlt().solve(beta);

    MartingaleTestResult out;
    out.chi2 = chi2;
    out.dof = n_feat;
    out.threshold = chi_square_quantile(1.0 - alpha, n_feat);
    out.reject = chi2 > out.threshold;
    return out;
}

} // namespace spdelab
