#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cdtrack/dcf.hpp"
#include "cdtrack/distill.hpp"
#include "cdtrack/factorized.hpp"
#include "cdtrack/features.hpp"
#include "cdtrack/labels.hpp"

namespace cdtrack {

struct TrackerConfig {
    FeatureSpec features = FeatureSpec::make(Provider::kGradHist);
    double lambda = 1e-2;
    double learning_rate = 0.015;  // eta of the accumulator update
    int max_rounds = 5;
    double label_sigma = 0.1;      // LabelConfig::sigma_factor
    int projection_dim = 0;        // q; 0 disables the projected path
    bool distill = true;
    double padding = 2.0;
    int out_h = 64;
    int out_w = 64;
    PruneCriterion prune_criterion = PruneCriterion::kHeldOut;
    int channel_budget = 0;  // DistillOptions::channel_budget

    void validate() const;
};

struct TrackerState {
    ChannelSelection selection;
    FreqFilter filter;
    NormalEquations accumulators;  // over the selected channels
    Box current_box;
    int frame_index = 0;
    std::optional<Projection> projection;
    std::vector<FeatureMap> history;  // at most 2, all channels
    bool distilled = false;
};

struct StepResult {
    Box box;
    Offset offset;
    double peak = 0.0;
    Plane response;
};

class Tracker {
public:
    explicit Tracker(TrackerConfig cfg);

    // Frame indices are 1-based and feed the noise and file providers.
    void init(const Image& frame, const Box& box, int frame_index = 1);
    StepResult step(const Image& frame);

    const TrackerState& state() const noexcept { return state_; }
    const TrackerConfig& config() const noexcept { return cfg_; }
    const Plane& label() const noexcept { return label_; }
    int grid_height() const noexcept { return label_.height; }
    int grid_width() const noexcept { return label_.width; }
    // Set once distillation has run on the second frame.
    const std::optional<DistillResult>& distillation() const noexcept { return distill_; }

    // Features of the patch at `box`, projected when the projected path is on.
    FeatureMap features_at(const Image& frame, const Box& box, int frame_index, bool selected_only) const;

private:
    void add_to_model(const FeatureMap& f, double eta);
    void solve();
    Box clamp_box(Box b, const Image& frame) const;

    TrackerConfig cfg_;
    TrackerState state_;
    Plane label_;
    ComplexPlane label_spectrum_;
    std::optional<DistillResult> distill_;
};

struct TrackRun {
    std::vector<Box> boxes;
    std::vector<double> peaks;    // response maximum; 0 for the initialization frame
    std::vector<double> seconds;  // wall time of init / step per frame
    int channels_used = 0;
};

// Tracks frames 1..n from the initial box; `frame_at(i)` returns frame i (0-based).
TrackRun track_frames(const std::function<Image(std::size_t)>& frame_at, std::size_t count, const Box& init_box,
                      const TrackerConfig& cfg);

}  // namespace cdtrack
