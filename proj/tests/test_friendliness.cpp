#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cdtrack/errors.hpp"
#include "cdtrack/friendliness.hpp"
#include "cdtrack/labels.hpp"
#include "cdtrack/synth.hpp"
#include "oracles.hpp"

using namespace cdtrack;

namespace {

FeatureMap from_values(std::vector<std::vector<double>> chans, int h, int w) {
    FeatureMap f;
    for (auto& c : chans) {
        Plane p(h, w);
        p.values = c;
        f.channels.push_back(p);
    }
    return f;
}

// Frames 1 and 2 of a synthetic sequence: grayscale channel plus one noise channel.
std::vector<FeatureMap> noisy_pair(std::uint64_t seed, double sigma) {
    SynthSpec spec;
    spec.frames = 2;
    spec.texture_seed = seed;
    spec.noise_channels = 1;
    spec.noise_sigma = sigma;
    spec.motion = {{1.25, -0.5}};
    const SynthSequence seq = generate_sequence(spec);
    FeatureSpec fs = FeatureSpec::make(Provider::kGrayscale);
    fs = noisy_channel_provider(fs, spec);
    std::vector<FeatureMap> out;
    for (int i = 0; i < 2; ++i) {
        const Patch p = extract_patch(seq.frames[static_cast<std::size_t>(i)], seq.groundtruth[static_cast<std::size_t>(i)], 2.0, 64, 64);
        out.push_back(featurize(p, fs, i + 1));
    }
    return out;
}

}  // namespace

TEST_CASE("spatial score examples") {
    CHECK(spatial_score(FeatureMap(1, 3, 3), 0) == 0.0);
    const FeatureMap f = from_values({{3, 0, 0, 4}}, 2, 2);
    CHECK(spatial_score(f, 0) == doctest::Approx(1.25));
    std::mt19937_64 rng(41);
    const FeatureMap g = oracle::random_map(rng, 3, 5, 6);
    for (int l = 0; l < 3; ++l) {
        double acc = 0.0;
        for (double v : g[static_cast<std::size_t>(l)].values) acc += v * v;
        CHECK(spatial_score(g, l) == doctest::Approx(std::sqrt(acc) / 30.0).epsilon(1e-14));
    }
}

TEST_CASE("temporal score examples") {
    std::mt19937_64 rng(42);
    const FeatureMap a = oracle::random_map(rng, 2, 4, 4);
    CHECK(temporal_score(a, a, 1) == 0.0);
    const FeatureMap z = from_values({{0, 0, 0, 0}}, 2, 2);
    const FeatureMap o = from_values({{1, 1, 1, 1}}, 2, 2);
    CHECK(temporal_score(z, o, 0) == -4.0);
    const FeatureMap b = oracle::random_map(rng, 2, 4, 4);
    double acc = 0.0;
    for (std::size_t k = 0; k < 16; ++k) acc += std::pow(a[1].values[k] - b[1].values[k], 2);
    CHECK(temporal_score(a, b, 1) == doctest::Approx(-acc).epsilon(1e-14));
    CHECK_THROWS_AS(temporal_score(a, FeatureMap(2, 4, 5), 0), DimensionError);
}

TEST_CASE("friendliness is (s - 1) t") {
    CHECK(friendliness(1.0, -7.0) == 0.0);
    CHECK(friendliness(1.25, -4.0) == -1.0);
    CHECK(friendliness(0.5, -2.0) == 1.0);
}

TEST_CASE("average friendliness over two frames is the single-pair value") {
    std::mt19937_64 rng(43);
    const std::vector<FeatureMap> frames{oracle::random_map(rng, 3, 4, 4), oracle::random_map(rng, 3, 4, 4)};
    const FriendlinessReport rep = average_friendliness(frames);
    for (int l = 0; l < 3; ++l) {
        const double s = spatial_score(frames[0], l);
        const double t = temporal_score(frames[0], frames[1], l);
        CHECK(rep.spatial[static_cast<std::size_t>(l)] == s);
        CHECK(rep.temporal[static_cast<std::size_t>(l)] == t);
        CHECK(rep.friendliness[static_cast<std::size_t>(l)] == friendliness(s, t));
    }
}

TEST_CASE("hand-computed three-frame two-channel report") {
    // channel 0: (2,0,0,0) -> (0,0,0,0) -> (0,0,0,0); channel 1: (8,0,0,0) -> (8,0,0,0) -> (8,0,0,2)
    const std::vector<FeatureMap> frames{
        from_values({{2, 0, 0, 0}, {8, 0, 0, 0}}, 2, 2),
        from_values({{0, 0, 0, 0}, {8, 0, 0, 0}}, 2, 2),
        from_values({{0, 0, 0, 0}, {8, 0, 0, 2}}, 2, 2),
    };
    const FriendlinessReport rep = average_friendliness(frames);
    // Pair 1: s0 = 2/4, t0 = -4, r0 = 2; s1 = 2, t1 = 0, r1 = 0.
    // Pair 2: s0 = 0,   t0 = 0,  r0 = 0; s1 = 2, t1 = -4, r1 = -4.
    CHECK(rep.spatial[0] == doctest::Approx(0.25));
    CHECK(rep.temporal[0] == doctest::Approx(-2.0));
    CHECK(rep.friendliness[0] == doctest::Approx(1.0));
    CHECK(rep.spatial[1] == doctest::Approx(2.0));
    CHECK(rep.temporal[1] == doctest::Approx(-2.0));
    CHECK(rep.friendliness[1] == doctest::Approx(-2.0));
    CHECK(rep.ranking == std::vector<int>{0, 1});
}

TEST_CASE("duplicated channels tie and rank by index") {
    std::mt19937_64 rng(44);
    FeatureMap a = oracle::random_map(rng, 1, 4, 4);
    FeatureMap b = oracle::random_map(rng, 1, 4, 4);
    a.channels.push_back(a[0]);
    b.channels.push_back(b[0]);
    a.channels.insert(a.channels.begin(), Plane(4, 4));
    b.channels.insert(b.channels.begin(), Plane(4, 4));
    const std::vector<FeatureMap> frames{a, b};
    const FriendlinessReport rep = average_friendliness(frames);
    CHECK(rep.friendliness[1] == rep.friendliness[2]);
    const auto pos = rep.rank_of();
    CHECK(pos[1] < pos[2]);
}

TEST_CASE("ranking is a permutation in descending friendliness") {
    std::mt19937_64 rng(45);
    for (int t = 0; t < 10; ++t) {
        std::vector<FeatureMap> frames;
        for (int k = 0; k < 4; ++k) frames.push_back(oracle::random_map(rng, 7, 3, 3, 0.5 + t));
        const FriendlinessReport rep = average_friendliness(frames);
        std::vector<int> sorted = rep.ranking;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> iota(7);
        std::iota(iota.begin(), iota.end(), 0);
        CHECK(sorted == iota);
        for (std::size_t k = 1; k < rep.ranking.size(); ++k) {
            CHECK(rep.friendliness[static_cast<std::size_t>(rep.ranking[k - 1])] >= rep.friendliness[static_cast<std::size_t>(rep.ranking[k])]);
        }
    }
}

TEST_CASE("average friendliness needs two frames") {
    const std::vector<FeatureMap> one{FeatureMap(2, 3, 3)};
    CHECK_THROWS_AS(average_friendliness(one), DimensionError);
}

TEST_CASE("prune with zero iterations keeps every channel") {
    std::mt19937_64 rng(46);
    const TrainingSet ts = oracle::random_training_set(rng, 2, 4, 4, 4, 0.1);
    CHECK(prune_loop(ts.samples, ts, 0) == ChannelSelection::all(4));
}

TEST_CASE("noise channel is pruned next to an informative channel") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto frames = noisy_pair(seed, 30.0);
        TrainingSet ts;
        ts.samples = frames;
        ts.label = gaussian_label(LabelConfig{0.1, 16, 16}, 8, 8);
        ts.lambda = 1e-2;
        const FriendlinessReport rep = average_friendliness(frames);
        CHECK(rep.ranking == std::vector<int>{0, 1});
        const ChannelSelection informative = ChannelSelection::of(2, std::vector<int>{0});
        const TrainingSpectra sp(ts);
        CHECK(selection_score(sp, informative, PruneCriterion::kHeldOut) <
              selection_score(sp, ChannelSelection::all(2), PruneCriterion::kHeldOut));
        CHECK(prune_loop(frames, ts, 1) == informative);
        // Scored in-sample, the superset can always fit at least as well.
        CHECK(selection_score(sp, ChannelSelection::all(2), PruneCriterion::kInSample) <=
              selection_score(sp, informative, PruneCriterion::kInSample));
    }
}

TEST_CASE("identical channels: in-sample loss falls as copies are added") {
    std::mt19937_64 rng(47);
    const Plane base = oracle::random_plane(rng, 6, 6);
    TrainingSet ts;
    ts.samples.push_back(FeatureMap(std::vector<Plane>(4, base)));
    ts.label = gaussian_label_sigma(6, 6, 1.0);
    ts.lambda = 0.5;
    const TrainingSpectra sp(ts);
    const std::vector<int> ranking{0, 1, 2, 3};
    const PruneResult pr = prune_by_ranking(sp, ranking, 3, PruneCriterion::kInSample);
    // Exhaustive over the nested prefixes {0..3}, {0..2}, {0,1}, {0}.
    std::vector<double> nested;
    for (int c = 4; c >= 1; --c) {
        ChannelSelection s = ChannelSelection::none(4);
        for (int l = 0; l < c; ++l) s.set(l, true);
        nested.push_back(selection_score(sp, s, PruneCriterion::kInSample));
    }
    for (std::size_t k = 1; k < nested.size(); ++k) CHECK(nested[k] > nested[k - 1]);
    // The loop stops at the first increase and returns the minimal visited prefix.
    CHECK(pr.scores.size() == 2);
    CHECK(pr.selection == ChannelSelection::all(4));
    CHECK(pr.scores[0] == nested[0]);
}

TEST_CASE("prune output never scores worse than the full selection") {
    std::mt19937_64 rng(48);
    for (int t = 0; t < 8; ++t) {
        const TrainingSet ts = oracle::random_training_set(rng, 3, 5, 4, 4, 0.05);
        const TrainingSpectra sp(ts);
        const FriendlinessReport rep = average_friendliness(ts.samples);
        for (auto crit : {PruneCriterion::kHeldOut, PruneCriterion::kInSample}) {
            const PruneResult pr = prune_by_ranking(sp, rep.ranking, 4, crit);
            CHECK(pr.selection.count() >= 1);
            CHECK(selection_score(sp, pr.selection, crit) <= pr.scores.front());
            CHECK(*std::min_element(pr.scores.begin(), pr.scores.end()) == selection_score(sp, pr.selection, crit));
            for (std::size_t k = 0; k < pr.dropped.size(); ++k) {
                CHECK(pr.dropped[k] == rep.ranking[rep.ranking.size() - 1 - k]);
            }
        }
    }
}

TEST_CASE("prune keeps at least one channel") {
    std::mt19937_64 rng(49);
    const TrainingSet ts = oracle::random_training_set(rng, 1, 3, 4, 4, 0.1);
    const std::vector<int> ranking{0, 1, 2};
    const PruneResult pr = prune_by_ranking(TrainingSpectra(ts), ranking, 10, PruneCriterion::kInSample);
    CHECK(pr.selection.count() >= 1);
    CHECK(pr.scores.size() <= 3);
}
