#include "cdtrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cdtrack/errors.hpp"

namespace cdtrack {

void TrackerConfig::validate() const {
    features.validate();
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) throw ConfigError("learning rate must lie in [0, 1]");
    if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (!(label_sigma > 0.0 && label_sigma < 1.0)) throw ConfigError("label sigma must lie in (0, 1)");
    if (projection_dim < 0) throw ConfigError("projection dimension must be nonnegative");
    if (!(padding >= 1.0)) throw ConfigError("padding must be at least 1");
    if (out_h <= 0 || out_w <= 0) throw ConfigError("patch size must be positive");
    if (channel_budget < 0) throw ConfigError("channel budget must be nonnegative");
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

FeatureMap Tracker::features_at(const Image& frame, const Box& box, int frame_index, bool selected_only) const {
    const Patch patch = extract_patch(frame, box, cfg_.padding, cfg_.out_h, cfg_.out_w);
    if (state_.projection) return project(featurize(patch, cfg_.features, frame_index), *state_.projection);
    if (selected_only && state_.selection.size() > 0) {
        return featurize(patch, cfg_.features, frame_index, state_.selection.mask());
    }
    return featurize(patch, cfg_.features, frame_index);
}

Box Tracker::clamp_box(Box b, const Image& frame) const {
    const double max_x = frame.width - b.w;
    const double max_y = frame.height - b.h;
    b.x = max_x >= 0.0 ? std::clamp(b.x, 0.0, max_x) : 0.5 * max_x;
    b.y = max_y >= 0.0 ? std::clamp(b.y, 0.0, max_y) : 0.5 * max_y;
    return b;
}

void Tracker::add_to_model(const FeatureMap& f, double eta) {
    const std::vector<int> chans = state_.selection.indices();
    NormalEquations sample(static_cast<int>(chans.size()), label_.height, label_.width);
    std::vector<ComplexPlane> spectra;
    spectra.reserve(chans.size());
    for (int l : chans) spectra.push_back(dft2(f[static_cast<std::size_t>(l)]));
    std::vector<const ComplexPlane*> planes;
    for (const auto& s : spectra) planes.push_back(&s);
    sample.add_sample(planes, label_spectrum_, 1.0);
    if (eta >= 1.0 || state_.accumulators.channels() != sample.channels()) {
        state_.accumulators = std::move(sample);
    } else {
        state_.accumulators.blend(sample, eta);
    }
}

void Tracker::solve() {
    const int c = state_.selection.count();
    state_.filter.channels = state_.selection.indices();
    state_.filter.planes = state_.accumulators.solve(cfg_.lambda / c);
}

void Tracker::init(const Image& frame, const Box& box, int frame_index) {
    if (!(box.w > 0.0 && box.h > 0.0)) throw DegenerateBoxError("initial box must have positive size");
    state_ = TrackerState{};
    distill_.reset();
    state_.current_box = box;
    state_.frame_index = frame_index;

    FeatureMap f = features_at(frame, box, frame_index, false);
    if (cfg_.projection_dim > 0) {
        std::vector<FeatureMap> one{f};
        state_.projection = pca_projection(one, cfg_.projection_dim);
        f = project(f, *state_.projection);
    }
    LabelConfig lc{cfg_.label_sigma, f.height(), f.width()};
    label_ = gaussian_label(lc, f.height() / cfg_.padding, f.width() / cfg_.padding);
    label_spectrum_ = dft2(label_);

    state_.selection = ChannelSelection::all(f.channel_count());
    add_to_model(f, 1.0);
    solve();
    state_.history.push_back(std::move(f));
}

StepResult Tracker::step(const Image& frame) {
    if (state_.frame_index == 0) throw ConfigError("tracker used before init");
    const int index = state_.frame_index + 1;

    const FeatureMap search = features_at(frame, state_.current_box, index, true);
    std::vector<ComplexPlane> spectra(static_cast<std::size_t>(search.channel_count()));
    for (int l : state_.selection.indices()) spectra[static_cast<std::size_t>(l)] = dft2(search[static_cast<std::size_t>(l)]);

    StepResult out;
    out.response = response(spectra, state_.filter);
    out.offset = locate(out.response);
    out.peak = *std::max_element(out.response.values.begin(), out.response.values.end());

    // Feature-grid cells to frame pixels.
    const double cell_x = state_.current_box.w * cfg_.padding / label_.width;
    const double cell_y = state_.current_box.h * cfg_.padding / label_.height;
    Box moved = state_.current_box;
    moved.x += out.offset.dx * cell_x;
    moved.y += out.offset.dy * cell_y;
    state_.current_box = clamp_box(moved, frame);
    state_.frame_index = index;
    out.box = state_.current_box;

    const bool distill_now = cfg_.distill && !state_.distilled && state_.history.size() == 1;
    const FeatureMap train = features_at(frame, state_.current_box, index, !distill_now);

    if (distill_now) {
        state_.history.push_back(train);
        TrainingSet ts;
        ts.samples = state_.history;
        ts.label = label_;
        ts.lambda = cfg_.lambda;
        DistillOptions opts;
        opts.max_rounds = cfg_.max_rounds;
        opts.criterion = cfg_.prune_criterion;
        opts.channel_budget = cfg_.channel_budget;
        const FreqFilter reference = state_.filter;
        distill_ = distill_channels(state_.history, TrainingSpectra(ts), opts, &reference);
        state_.selection = distill_->selection();
        state_.distilled = true;
        // Restart the model from frame 1 over the distilled channels.
        add_to_model(state_.history.front(), 1.0);
    } else if (state_.history.size() < 2) {
        state_.history.push_back(train);
    }

    add_to_model(train, cfg_.learning_rate);
    solve();
    return out;
}

TrackRun track_frames(const std::function<Image(std::size_t)>& frame_at, std::size_t count, const Box& init_box,
                      const TrackerConfig& cfg) {
    using clock = std::chrono::steady_clock;
    TrackRun run;
    if (count == 0) return run;
    Tracker tracker(cfg);
    {
        const Image first = frame_at(0);
        const auto t0 = clock::now();
        tracker.init(first, init_box, 1);
        run.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    run.boxes.push_back(init_box);
    run.peaks.push_back(0.0);
    for (std::size_t i = 1; i < count; ++i) {
        const Image frame = frame_at(i);
        const auto t0 = clock::now();
        const StepResult r = tracker.step(frame);
        run.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        run.boxes.push_back(r.box);
        run.peaks.push_back(r.peak);
    }
    run.channels_used = tracker.state().selection.count();
    return run;
}

}  // namespace cdtrack
