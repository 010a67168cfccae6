#include "cdtrack/factorized.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "cdtrack/errors.hpp"

namespace cdtrack {

void Projection::validate() const {
    if (d <= 0 || q <= 0 || q >= d) throw DimensionError("projection requires 0 < q < d");
    if (matrix.size() != static_cast<std::size_t>(d) * q) throw DimensionError("projection matrix has wrong size");
    for (int j = 0; j < q; ++j) {
        double norm = 0.0;
        for (int l = 0; l < d; ++l) {
            if (!std::isfinite(at(l, j))) throw NumericalError("non-finite projection entry");
            norm += at(l, j) * at(l, j);
        }
        if (std::abs(std::sqrt(norm) - 1.0) > 1e-8) throw NumericalError("projection column is not unit norm");
    }
}

Projection pca_projection(std::span<const FeatureMap> samples, int q) {
    if (samples.empty()) throw DimensionError("pca_projection needs at least one sample");
    const int d = samples.front().channel_count();
    if (q <= 0 || q >= d) throw DimensionError("pca_projection requires 0 < q < d");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    std::size_t count = 0;
    for (const auto& f : samples) {
        f.validate();
        if (f.channel_count() != d) throw DimensionError("samples differ in channel count");
        for (std::size_t k = 0; k < f[0].size(); ++k) {
            for (int l = 0; l < d; ++l) mean(l) += f[static_cast<std::size_t>(l)].values[k];
        }
        count += f[0].size();
    }
    mean /= static_cast<double>(count);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd x(d);
    for (const auto& f : samples) {
        for (std::size_t k = 0; k < f[0].size(); ++k) {
            for (int l = 0; l < d; ++l) x(l) = f[static_cast<std::size_t>(l)].values[k] - mean(l);
            cov.selfadjointView<Eigen::Lower>().rankUpdate(x);
        }
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(count);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
    const double top = std::max(vals(d - 1), 0.0);

    Projection p;
    p.d = d;
    p.q = q;
    p.matrix.assign(static_cast<std::size_t>(d) * q, 0.0);
    for (int j = 0; j < q; ++j) {
        const int src = d - 1 - j;
        if (!(vals(src) > 1e-12 * top) || top == 0.0) p.rank_deficient = true;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        v.normalize();
        int arg = 0;
        for (int l = 1; l < d; ++l) {
            if (std::abs(v(l)) > std::abs(v(arg)) + 1e-12) arg = l;
        }
        if (v(arg) < 0.0) v = -v;
        for (int l = 0; l < d; ++l) p.at(l, j) = v(l);
    }
    return p;
}

Projection identity_projection(int d, int q) {
    Projection p;
    p.d = d;
    p.q = q;
    p.matrix.assign(static_cast<std::size_t>(d) * q, 0.0);
    for (int j = 0; j < q && j < d; ++j) p.at(j, j) = 1.0;
    p.validate();
    return p;
}

FeatureMap project(const FeatureMap& f, const Projection& p) {
    f.validate();
    if (f.channel_count() != p.d) throw DimensionError("projection expects " + std::to_string(p.d) + " channels");
    FeatureMap g(p.q, f.height(), f.width());
    const std::size_t m = f[0].size();
    for (int j = 0; j < p.q; ++j) {
        auto& out = g[static_cast<std::size_t>(j)].values;
        for (int l = 0; l < p.d; ++l) {
            const double w = p.at(l, j);
            if (w == 0.0) continue;
            const auto& in = f[static_cast<std::size_t>(l)].values;
            for (std::size_t k = 0; k < m; ++k) out[k] += w * in[k];
        }
    }
    return g;
}

DistillResult distill_projected(const TrainingSet& ts, const Projection& p, std::span<const FeatureMap> seed_frames,
                                const DistillOptions& opts) {
    p.validate();
    TrainingSet projected;
    projected.label = ts.label;
    projected.weights = ts.weights;
    projected.lambda = ts.lambda;
    for (const auto& s : ts.samples) projected.samples.push_back(project(s, p));
    std::vector<FeatureMap> seeds;
    for (const auto& f : seed_frames) seeds.push_back(project(f, p));
    return distill_channels(seeds, TrainingSpectra(projected), opts);
}

}  // namespace cdtrack
