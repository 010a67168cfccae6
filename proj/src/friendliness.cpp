#include "cdtrack/friendliness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdtrack/errors.hpp"

namespace cdtrack {

double spatial_score(const FeatureMap& f, int l) {
    const Plane& p = f.channels.at(static_cast<std::size_t>(l));
    return std::sqrt(sum_squares(p)) / static_cast<double>(p.size());
}

double temporal_score(const FeatureMap& f, const FeatureMap& next, int l) {
    const Plane& a = f.channels.at(static_cast<std::size_t>(l));
    const Plane& b = next.channels.at(static_cast<std::size_t>(l));
    if (!a.same_shape(b)) throw DimensionError("temporal_score: mismatched channel shapes");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.values[k] - b.values[k];
        s += d * d;
    }
    return -s;
}

double friendliness(double s, double t) { return (s - 1.0) * t; }

std::vector<int> FriendlinessReport::rank_of() const {
    std::vector<int> pos(ranking.size());
    for (std::size_t r = 0; r < ranking.size(); ++r) pos[static_cast<std::size_t>(ranking[r])] = static_cast<int>(r);
    return pos;
}

FriendlinessReport average_friendliness(std::span<const FeatureMap> frames) {
    if (frames.size() < 2) throw DimensionError("friendliness needs at least two frames");
    const int d = frames.front().channel_count();
    for (const auto& f : frames) {
        f.validate();
        if (f.channel_count() != d || f.height() != frames.front().height() || f.width() != frames.front().width()) {
            throw DimensionError("friendliness frames differ in shape");
        }
    }
    FriendlinessReport rep;
    rep.spatial.assign(static_cast<std::size_t>(d), 0.0);
    rep.temporal.assign(static_cast<std::size_t>(d), 0.0);
    rep.friendliness.assign(static_cast<std::size_t>(d), 0.0);
    const double pairs = static_cast<double>(frames.size() - 1);
    for (int l = 0; l < d; ++l) {
        const auto li = static_cast<std::size_t>(l);
        for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
            const double s = spatial_score(frames[i], l);
            const double t = temporal_score(frames[i], frames[i + 1], l);
            rep.spatial[li] += s;
            rep.temporal[li] += t;
            rep.friendliness[li] += friendliness(s, t);
        }
        rep.spatial[li] /= pairs;
        rep.temporal[li] /= pairs;
        rep.friendliness[li] /= pairs;
    }
    rep.ranking.resize(static_cast<std::size_t>(d));
    std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
    std::stable_sort(rep.ranking.begin(), rep.ranking.end(), [&](int a, int b) {
        return rep.friendliness[static_cast<std::size_t>(a)] > rep.friendliness[static_cast<std::size_t>(b)];
    });
    return rep;
}

double selection_score(const TrainingSpectra& ts, const ChannelSelection& sel, PruneCriterion criterion) {
    const int n = ts.sample_count();
    if (criterion == PruneCriterion::kInSample || n < 2) {
        return loss(ts, solve_filter(ts, sel), sel);
    }
    double total = 0.0;
    std::vector<int> rest;
    for (int i = 0; i < n; ++i) {
        rest.clear();
        for (int j = 0; j < n; ++j) {
            if (j != i) rest.push_back(j);
        }
        const FreqFilter flt = solve_filter(ts.subset(rest), sel);
        total += ts.weight(i) * sample_residual(ts, i, flt, sel);
    }
    return total;
}

PruneResult prune_by_ranking(const TrainingSpectra& ts, std::span<const int> ranking, int max_iters,
                             PruneCriterion criterion) {
    const int d = ts.channel_count();
    if (static_cast<int>(ranking.size()) != d) throw DimensionError("ranking length differs from channel count");
    if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");

    PruneResult out;
    ChannelSelection current = ChannelSelection::all(d);
    out.selection = current;
    out.scores.push_back(selection_score(ts, current, criterion));
    double best = out.scores.back();

    for (int it = 0; it < max_iters && current.count() > 1; ++it) {
        const int victim = ranking[static_cast<std::size_t>(d - 1 - it)];
        current.set(victim, false);
        const double score = selection_score(ts, current, criterion);
        out.dropped.push_back(victim);
        out.scores.push_back(score);
        if (score < best) {
            best = score;
            out.selection = current;
        }
        if (score > out.scores[out.scores.size() - 2]) break;
    }
    return out;
}

ChannelSelection prune_loop(std::span<const FeatureMap> frames, const TrainingSet& ts, int max_iters,
                            PruneCriterion criterion) {
    const FriendlinessReport rep = average_friendliness(frames);
    const TrainingSpectra spectra(ts);
    if (rep.channel_count() != spectra.channel_count()) {
        throw DimensionError("friendliness frames and training set differ in channel count");
    }
    return prune_by_ranking(spectra, rep.ranking, max_iters, criterion).selection;
}

}  // namespace cdtrack
