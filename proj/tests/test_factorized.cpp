#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cdtrack/errors.hpp"
#include "cdtrack/factorized.hpp"
#include "cdtrack/labels.hpp"
#include "oracles.hpp"

using namespace cdtrack;

namespace {

// Pooled, mean-removed per-pixel vectors as rows.
Eigen::MatrixXd centred_rows(const std::vector<FeatureMap>& samples) {
    const int d = samples.front().channel_count();
    const std::size_t m = samples.front()[0].size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(m * samples.size()), d);
    Eigen::Index row = 0;
    for (const auto& f : samples) {
        for (std::size_t k = 0; k < m; ++k, ++row) {
            for (int l = 0; l < d; ++l) x(row, l) = f[static_cast<std::size_t>(l)].values[k];
        }
    }
    x.rowwise() -= x.colwise().mean();
    return x;
}

Eigen::MatrixXd as_matrix(const Projection& p) {
    Eigen::MatrixXd m(p.d, p.q);
    for (int l = 0; l < p.d; ++l) {
        for (int j = 0; j < p.q; ++j) m(l, j) = p.at(l, j);
    }
    return m;
}

// Features whose per-pixel vectors span `rank` random directions in R^d.
std::vector<FeatureMap> low_rank_maps(std::mt19937_64& rng, int count, int d, int rank, int h, int w) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd basis(d, rank);
    for (int l = 0; l < d; ++l) {
        for (int r = 0; r < rank; ++r) basis(l, r) = n(rng);
    }
    std::vector<FeatureMap> out;
    for (int i = 0; i < count; ++i) {
        FeatureMap f(d, h, w);
        for (int k = 0; k < h * w; ++k) {
            Eigen::VectorXd z(rank);
            for (int r = 0; r < rank; ++r) z(r) = n(rng);
            const Eigen::VectorXd v = basis * z;
            for (int l = 0; l < d; ++l) f[static_cast<std::size_t>(l)].values[static_cast<std::size_t>(k)] = v(l);
        }
        out.push_back(f);
    }
    return out;
}

}  // namespace

TEST_CASE("PCA of perfectly correlated channels") {
    std::mt19937_64 rng(71);
    Plane a = oracle::random_plane(rng, 5, 5);
    const std::vector<FeatureMap> s{FeatureMap(std::vector<Plane>{a, a})};
    const Projection p = pca_projection(s, 1);
    CHECK(p.at(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(p.at(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_FALSE(p.rank_deficient);
}

TEST_CASE("PCA columns are orthonormal on full-rank data") {
    std::mt19937_64 rng(72);
    const std::vector<FeatureMap> s{oracle::random_map(rng, 5, 6, 6), oracle::random_map(rng, 5, 6, 6)};
    const Projection p = pca_projection(s, 4);
    const Eigen::MatrixXd m = as_matrix(p);
    CHECK((m.transpose() * m - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("PCA reconstruction error matches an SVD oracle") {
    std::mt19937_64 rng(73);
    for (int t = 0; t < 5; ++t) {
        std::vector<FeatureMap> s;
        for (int i = 0; i < 3; ++i) s.push_back(oracle::random_map(rng, 6, 5, 4, 1.0 + t));
        // Give the channels unequal variances so the principal directions are well separated.
        for (auto& f : s) {
            for (int l = 0; l < 6; ++l) {
                for (auto& v : f[static_cast<std::size_t>(l)].values) v *= (l + 1);
            }
        }
        const Projection p = pca_projection(s, 3);
        const Eigen::MatrixXd x = centred_rows(s);
        const Eigen::MatrixXd pm = as_matrix(p);
        const double got = (x - x * pm * pm.transpose()).squaredNorm();
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
        const Eigen::VectorXd sv = svd.singularValues();
        double want = 0.0;
        for (int k = 3; k < 6; ++k) want += sv(k) * sv(k);
        CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, want));
    }
}

TEST_CASE("rank deficiency is flagged and completed orthonormally") {
    std::mt19937_64 rng(74);
    const auto s = low_rank_maps(rng, 2, 6, 2, 5, 5);
    const Projection p = pca_projection(s, 4);
    CHECK(p.rank_deficient);
    const Eigen::MatrixXd m = as_matrix(p);
    CHECK((m.transpose() * m - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    const auto full = low_rank_maps(rng, 2, 6, 4, 5, 5);
    CHECK_FALSE(pca_projection(full, 4).rank_deficient);
}

TEST_CASE("PCA argument checks") {
    std::mt19937_64 rng(75);
    const std::vector<FeatureMap> s{oracle::random_map(rng, 3, 4, 4)};
    CHECK_THROWS_AS(pca_projection(s, 3), DimensionError);
    CHECK_THROWS_AS(pca_projection(s, 0), DimensionError);
    CHECK_THROWS_AS(pca_projection(std::vector<FeatureMap>{}, 1), DimensionError);
}

TEST_CASE("identity-prefix projection keeps the first channels") {
    std::mt19937_64 rng(76);
    const FeatureMap f = oracle::random_map(rng, 5, 3, 4);
    const FeatureMap g = project(f, identity_projection(5, 3));
    REQUIRE(g.channel_count() == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(g[j].values == f[j].values);
}

TEST_CASE("projection of zeros is zero and matches a per-pixel product") {
    std::mt19937_64 rng(77);
    const std::vector<FeatureMap> s{oracle::random_map(rng, 4, 3, 3)};
    const Projection p = pca_projection(s, 2);
    const FeatureMap z = project(FeatureMap(4, 3, 3), p);
    for (const auto& c : z.channels) {
        for (double v : c.values) CHECK(v == 0.0);
    }
    const FeatureMap f = oracle::random_map(rng, 4, 3, 3);
    const FeatureMap g = project(f, p);
    const Eigen::MatrixXd pm = as_matrix(p);
    for (std::size_t k = 0; k < 9; ++k) {
        Eigen::VectorXd v(4);
        for (int l = 0; l < 4; ++l) v(l) = f[static_cast<std::size_t>(l)].values[k];
        const Eigen::VectorXd want = pm.transpose() * v;
        for (int j = 0; j < 2; ++j) CHECK(std::abs(g[static_cast<std::size_t>(j)].values[k] - want(j)) < 1e-12);
    }
    CHECK_THROWS_AS(project(oracle::random_map(rng, 3, 3, 3), p), DimensionError);
}

TEST_CASE("distillation through an identity prefix equals the plain pipeline") {
    std::mt19937_64 rng(78);
    for (int t = 0; t < 3; ++t) {
        TrainingSet ts = oracle::random_training_set(rng, 2, 7, 5, 5, 0.05);
        const Projection p = identity_projection(7, 4);
        const DistillResult a = distill_projected(ts, p, ts.samples, DistillOptions{});
        TrainingSet plain = ts;
        for (auto& s : plain.samples) s.channels.resize(4);
        const DistillResult b = distill_channels(plain.samples, TrainingSpectra(plain), DistillOptions{});
        CHECK(a.selection() == b.selection());
        CHECK(a.alternation.loss_trace == b.alternation.loss_trace);
        REQUIRE(a.filter().planes.size() == b.filter().planes.size());
        for (std::size_t j = 0; j < a.filter().planes.size(); ++j) CHECK(a.filter().planes[j].values == b.filter().planes[j].values);
    }
}

TEST_CASE("keeping every projected channel reduces to a plain solve") {
    std::mt19937_64 rng(79);
    const TrainingSet ts = oracle::random_training_set(rng, 2, 5, 4, 4, 0.1);
    const Projection p = pca_projection(ts.samples, 3);
    DistillOptions opts;
    opts.prune_max_iters = 0;
    const DistillResult r = distill_projected(ts, p, ts.samples, opts);
    REQUIRE(r.selection() == ChannelSelection::all(3));
    TrainingSet proj = ts;
    for (auto& s : proj.samples) s = project(s, p);
    const FreqFilter want = solve_filter(proj, ChannelSelection::all(3));
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t k = 0; k < want.planes[j].size(); ++k) {
            CHECK(std::abs(r.filter().planes[j].values[k] - want.planes[j].values[k]) < 1e-12);
        }
    }
}

TEST_CASE("projected distillation against the all-projected-channel filter") {
    std::mt19937_64 rng(80);
    for (int t = 0; t < 5; ++t) {
        // Four informative low-rank channels followed by six small noise channels.
        auto maps = low_rank_maps(rng, 3, 4, 4, 8, 8);
        TrainingSet ts;
        ts.label = gaussian_label_sigma(8, 8, 1.0);
        ts.lambda = 0.05;
        for (auto& f : maps) {
            for (int k = 0; k < 6; ++k) f.channels.push_back(oracle::random_plane(rng, 8, 8, 0.01));
            ts.samples.push_back(f);
        }
        const Projection p = pca_projection(ts.samples, 4);
        const DistillResult r = distill_projected(ts, p, ts.samples, DistillOptions{});
        TrainingSet proj = ts;
        for (auto& s : proj.samples) s = project(s, p);
        const TrainingSpectra sp(proj);
        const auto all = ChannelSelection::all(4);
        // Held-out, the pruning seed never scores worse than all projected channels.
        CHECK(selection_score(sp, r.prune.selection, PruneCriterion::kHeldOut) <=
              selection_score(sp, all, PruneCriterion::kHeldOut));
        // In-sample, the all-channel solve is a lower bound for any subset.
        CHECK(loss(sp, solve_filter(sp, all), all) <= r.alternation.loss * (1 + 1e-12));
    }
}
