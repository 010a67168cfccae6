#include "doctest.h"

#include <cmath>

#include "cdtrack/errors.hpp"
#include "cdtrack/friendliness.hpp"
#include "cdtrack/labels.hpp"
#include "cdtrack/synth.hpp"
#include "cdtrack/distill.hpp"

using namespace cdtrack;

TEST_CASE("static motion gives identical frames") {
    SynthSpec spec;
    spec.frames = 4;
    spec.motion = {{0.0, 0.0}};
    const SynthSequence seq = generate_sequence(spec);
    REQUIRE(seq.frames.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(seq.frames[i] == seq.frames[0]);
        CHECK(seq.groundtruth[i] == seq.groundtruth[0]);
    }
}

TEST_CASE("ground truth follows the motion") {
    SynthSpec spec;
    spec.frames = 2;
    spec.motion = {{5.0, 0.0}};
    const SynthSequence seq = generate_sequence(spec);
    CHECK(seq.groundtruth[1].x == seq.groundtruth[0].x + 5.0);
    CHECK(seq.groundtruth[1].y == seq.groundtruth[0].y);
    CHECK(seq.groundtruth[1].w == spec.object_w);

    SynthSpec list = spec;
    list.frames = 3;
    list.motion = {{1.5, -2.0}, {-0.25, 3.0}};
    const SynthSequence s2 = generate_sequence(list);
    CHECK(s2.groundtruth[2].x == s2.groundtruth[0].x + 1.25);
    CHECK(s2.groundtruth[2].y == s2.groundtruth[0].y + 1.0);
}

TEST_CASE("generation is deterministic per seed") {
    SynthSpec spec;
    spec.frames = 3;
    spec.motion = {{0.7, 0.3}};
    spec.texture_seed = 99;
    const SynthSequence a = generate_sequence(spec);
    const SynthSequence b = generate_sequence(spec);
    CHECK(a.frames == b.frames);
    CHECK(a.groundtruth == b.groundtruth);
    spec.texture_seed = 100;
    CHECK_FALSE(generate_sequence(spec).frames == a.frames);
}

TEST_CASE("object inside the box differs from the background") {
    SynthSpec spec;
    spec.frames = 1;
    const SynthSequence seq = generate_sequence(spec);
    const Image& img = seq.frames[0];
    const Box& b = seq.groundtruth[0];
    double in = 0.0;
    double out = 0.0;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const bool inside = r >= b.y && r < b.y + b.h && c >= b.x && c < b.x + b.w;
            const double v = img.at(r, c);
            (inside ? in : out) += v * v;
        }
        for (int c = 0; c < img.width; ++c) CHECK(img.at(r, c) >= 0.0f);
    }
    CHECK(in > 0.0);
    CHECK(out > 0.0);
}

TEST_CASE("motion leaving the frame is rejected") {
    SynthSpec spec;
    spec.frames = 20;
    spec.motion = {{10.0, 0.0}};
    CHECK_THROWS_AS(generate_sequence(spec), ConfigError);
    SynthSpec bad;
    bad.frames = 0;
    CHECK_THROWS_AS(generate_sequence(bad), ConfigError);
}

TEST_CASE("noise provider with no channels is the base provider") {
    SynthSpec spec;
    const FeatureSpec base = FeatureSpec::make(Provider::kGradHist);
    const FeatureSpec out = noisy_channel_provider(base, spec);
    CHECK(out.channel_count() == base.channel_count());
    const Patch p = extract_patch(generate_sequence(spec).frames[0], Box{60, 60, 32, 32}, 2.0, 64, 64);
    const FeatureMap a = featurize(p, base);
    const FeatureMap b = featurize(p, out);
    for (std::size_t l = 0; l < 9; ++l) CHECK(a[l].values == b[l].values);
}

TEST_CASE("zero-sigma noise channels are all zero") {
    SynthSpec spec;
    spec.noise_channels = 2;
    spec.noise_sigma = 0.0;
    spec.frames = 2;
    const FeatureSpec fs = noisy_channel_provider(FeatureSpec::make(Provider::kGrayscale), spec);
    const SynthSequence seq = generate_sequence(spec);
    std::vector<FeatureMap> frames;
    for (int i = 0; i < 2; ++i) {
        frames.push_back(featurize(extract_patch(seq.frames[static_cast<std::size_t>(i)], seq.groundtruth[0], 2.0, 64, 64), fs, i + 1));
    }
    for (int l = 1; l < 3; ++l) {
        CHECK(spatial_score(frames[0], l) == 0.0);
        CHECK(temporal_score(frames[0], frames[1], l) == 0.0);
    }
}

TEST_CASE("noise temporal score is about -2 m sigma^2") {
    NoiseSpec ns{3, 1.0, 1234};
    double total = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const Plane a = noise_channel(ns, 2 * t + 1, 1, 64, 64);
        const Plane b = noise_channel(ns, 2 * t + 2, 1, 64, 64);
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += std::pow(a.values[k] - b.values[k], 2);
        total -= s;
        CHECK(std::abs(-s / (2.0 * 4096) + 1.0) < 0.1);
    }
    CHECK(std::abs(total / trials / (-2.0 * 4096) - 1.0) < 0.02);
    // Different frames and channels give different draws; the same ones repeat.
    CHECK(noise_channel(ns, 1, 0, 4, 4).values == noise_channel(ns, 1, 0, 4, 4).values);
    CHECK_FALSE(noise_channel(ns, 1, 0, 4, 4).values == noise_channel(ns, 2, 0, 4, 4).values);
    CHECK_FALSE(noise_channel(ns, 1, 0, 4, 4).values == noise_channel(ns, 1, 1, 4, 4).values);
}

TEST_CASE("large-sigma noise ranks last and pruning removes only noise") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthSpec spec;
        spec.frames = 2;
        spec.texture_seed = seed;
        spec.noise_channels = 8;
        spec.noise_sigma = 30.0;
        spec.motion = {{0.75, -0.5}};
        const SynthSequence seq = generate_sequence(spec);
        FeatureSpec base = FeatureSpec::make(Provider::kGradHist);
        base.bins = 8;
        const FeatureSpec fs = noisy_channel_provider(base, spec);
        TrainingSet ts;
        for (int i = 0; i < 2; ++i) {
            ts.samples.push_back(featurize(extract_patch(seq.frames[static_cast<std::size_t>(i)], seq.groundtruth[static_cast<std::size_t>(i)], 2.0, 64, 64), fs, i + 1));
        }
        ts.label = gaussian_label(LabelConfig{0.1, 16, 16}, 8, 8);
        const FriendlinessReport rep = average_friendliness(ts.samples);
        for (int k = 0; k < 8; ++k) CHECK(rep.ranking[static_cast<std::size_t>(k)] < 8);
        const ChannelSelection sel = prune_loop(ts.samples, ts, 15);
        for (int l = 0; l < 8; ++l) CHECK(sel.contains(l));
    }
}
