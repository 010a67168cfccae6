#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdtrack/dcf.hpp"
#include "cdtrack/friendliness.hpp"

namespace cdtrack {

// Caches for evaluating the selection loss at a fixed filter h:
//   E(a) = (1/m) sum_i beta_i ||sum_l a_l A_il - B||^2 + (lambda/c)(1/m) sum_l a_l gamma_l
// with A_il = f_il . conj(h_l), B = y and gamma_l = ||h_l||^2. Channels the
// filter does not cover have A_il = 0 and gamma_l = 0.
struct SelectionSearchState {
    ChannelSelection current;
    std::vector<int> ranked_good;  // current channels, best-ranked first
    std::vector<int> complement;   // the other channels, ascending index
    std::vector<std::vector<ComplexPlane>> contribution;  // [l][i] A_il; empty when h_l is absent
    ComplexPlane target;                                  // B
    std::vector<double> gamma;
    std::vector<double> weights;
    double lambda = 0.0;
    std::uint64_t filter_fingerprint = 0;

    int channel_count() const noexcept { return static_cast<int>(gamma.size()); }
    std::size_t bins() const noexcept { return target.size(); }
};

std::uint64_t fingerprint(const FreqFilter& flt);

// `ranking` orders all d channels best-first; an empty span means index order.
SelectionSearchState build_search_state(const TrainingSpectra& ts, const FreqFilter& flt,
                                        const ChannelSelection& current, std::span<const int> ranking = {});

double selection_loss(const SelectionSearchState& state, const ChannelSelection& sel);
// Same, after checking that the caches were built from `flt`.
double selection_loss(const SelectionSearchState& state, const ChannelSelection& sel, const FreqFilter& flt);

// One backward pass over the ranked current channels; each is replaced by the
// complement channel giving the largest strict loss decrease, if any.
ChannelSelection swap_search(const SelectionSearchState& state);

struct AlternationResult {
    FreqFilter filter;
    ChannelSelection selection;
    double loss = 0.0;
    std::vector<double> loss_trace;
    int rounds = 0;
};

// Alternates exact filter solves with swap searches from `seed`.
// `reference`, when given, supplies filter planes for channels outside the
// current selection so that swapping them in is evaluated on real data;
// without it those channels carry zero planes.
AlternationResult alternate(const TrainingSpectra& ts, const ChannelSelection& seed, int max_rounds,
                            std::span<const int> ranking = {}, const FreqFilter* reference = nullptr);
AlternationResult alternate(const TrainingSet& ts, const ChannelSelection& seed, int max_rounds);

inline constexpr double kAlternationTolerance = 1e-9;

struct DistillOptions {
    int max_rounds = 5;
    int prune_max_iters = -1;  // negative: d - 1
    PruneCriterion criterion = PruneCriterion::kHeldOut;
    // Positive: skip pruning and seed with the top `channel_budget` ranked channels.
    int channel_budget = 0;
};

struct DistillResult {
    FriendlinessReport report;
    PruneResult prune;
    AlternationResult alternation;

    const ChannelSelection& selection() const noexcept { return alternation.selection; }
    const FreqFilter& filter() const noexcept { return alternation.filter; }
};

// Friendliness ranking on `seed_frames`, pruning for the seed selection, then
// alternating optimization on `ts`.
DistillResult distill_channels(std::span<const FeatureMap> seed_frames, const TrainingSpectra& ts,
                               const DistillOptions& opts, const FreqFilter* reference = nullptr);

}  // namespace cdtrack
