#pragma once

#include <span>
#include <vector>

#include "cdtrack/dcf.hpp"
#include "cdtrack/tensor.hpp"

namespace cdtrack {

// s(l) = ||f_l||_2 / m
double spatial_score(const FeatureMap& f, int l);

// t(l) = -||f_l - g_l||^2 between consecutive frames.
double temporal_score(const FeatureMap& f, const FeatureMap& next, int l);

// r = (s - 1) t, exactly.
double friendliness(double s, double t);

struct FriendlinessReport {
    std::vector<double> spatial;       // mean s_i(l) over the k-1 frame pairs
    std::vector<double> temporal;      // mean t_i(l)
    std::vector<double> friendliness;  // mean r_i(l)
    std::vector<int> ranking;          // channels by descending mean r, ties to the lower index

    int channel_count() const noexcept { return static_cast<int>(friendliness.size()); }
    // Position of each channel in `ranking`.
    std::vector<int> rank_of() const;
};

// Scores every channel over the k-1 consecutive pairs of `frames` (k >= 2).
FriendlinessReport average_friendliness(std::span<const FeatureMap> frames);

// How a candidate selection is scored while pruning.
enum class PruneCriterion {
    // Residual of the loss data term on each sample when the filter is solved
    // on the remaining samples. Falls back to kInSample for one sample.
    kHeldOut,
    // Loss of the filter solved on all samples, evaluated on the same samples.
    kInSample,
};

// Score of `sel` under `criterion` (lower is better).
double selection_score(const TrainingSpectra& ts, const ChannelSelection& sel, PruneCriterion criterion);

struct PruneResult {
    ChannelSelection selection;          // lowest-scoring visited selection
    std::vector<double> scores;          // one per visited selection, full set first
    std::vector<int> dropped;            // channel removed before each visit after the first
};

// Starts from all channels and drops the lowest-ranked remaining channel per
// iteration, stopping at the first score increase or after max_iters drops.
PruneResult prune_by_ranking(const TrainingSpectra& ts, std::span<const int> ranking, int max_iters,
                             PruneCriterion criterion = PruneCriterion::kHeldOut);

// Ranks channels on `frames` and prunes against `ts`.
ChannelSelection prune_loop(std::span<const FeatureMap> frames, const TrainingSet& ts, int max_iters,
                            PruneCriterion criterion = PruneCriterion::kHeldOut);

}  // namespace cdtrack
