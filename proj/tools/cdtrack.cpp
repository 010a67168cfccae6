// cdtrack command-line tool: track, eval, synth, distill-study.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdtrack/distill.hpp"
#include "cdtrack/errors.hpp"
#include "cdtrack/eval.hpp"
#include "cdtrack/friendliness.hpp"
#include "cdtrack/labels.hpp"
#include "cdtrack/sequence.hpp"
#include "cdtrack/synth.hpp"
#include "cdtrack/tracker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cdtrack;

namespace {

Provider parse_provider(const std::string& s) {
    if (s == "grayscale") return Provider::kGrayscale;
    if (s == "color3") return Provider::kColor3;
    if (s == "gradhist") return Provider::kGradHist;
    if (s == "file") return Provider::kFile;
    throw ConfigError("unknown feature provider '" + s + "'");
}

const char* provider_name(Provider p) {
    switch (p) {
        case Provider::kGrayscale: return "grayscale";
        case Provider::kColor3: return "color3";
        case Provider::kGradHist: return "gradhist";
        case Provider::kFile: return "file";
    }
    return "gradhist";
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

FeatureSpec parse_features(const json& j) {
    FeatureSpec fs = FeatureSpec::make(parse_provider(j.value("provider", std::string("gradhist"))));
    read_key(j, "bins", fs.bins);
    read_key(j, "cell_size", fs.cell_size);
    read_key(j, "window", fs.window);
    read_key(j, "normalize", fs.normalize);
    read_key(j, "file_stem", fs.file_stem);
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        read_key(n, "channels", fs.noise.channels);
        read_key(n, "sigma", fs.noise.sigma);
        read_key(n, "seed", fs.noise.seed);
    }
    return fs;
}

json features_json(const FeatureSpec& fs) {
    return {{"provider", provider_name(fs.provider)},
            {"bins", fs.bins},
            {"cell_size", fs.cell_size},
            {"window", fs.window},
            {"normalize", fs.normalize},
            {"file_stem", fs.file_stem},
            {"noise", {{"channels", fs.noise.channels}, {"sigma", fs.noise.sigma}, {"seed", fs.noise.seed}}}};
}

// Unset keys keep the TrackerConfig defaults.
TrackerConfig load_config(const std::optional<fs::path>& path) {
    TrackerConfig cfg;
    if (!path) return cfg;
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config " + path->string());
    json j;
    try {
        in >> j;
        if (j.contains("features")) cfg.features = parse_features(j.at("features"));
        read_key(j, "lambda", cfg.lambda);
        read_key(j, "learning_rate", cfg.learning_rate);
        read_key(j, "max_rounds", cfg.max_rounds);
        read_key(j, "label_sigma", cfg.label_sigma);
        read_key(j, "projection_dim", cfg.projection_dim);
        read_key(j, "distill", cfg.distill);
        read_key(j, "padding", cfg.padding);
        read_key(j, "out_h", cfg.out_h);
        read_key(j, "out_w", cfg.out_w);
        read_key(j, "channel_budget", cfg.channel_budget);
        if (j.contains("prune_criterion")) {
            const auto c = j.at("prune_criterion").get<std::string>();
            if (c == "held_out") {
                cfg.prune_criterion = PruneCriterion::kHeldOut;
            } else if (c == "in_sample") {
                cfg.prune_criterion = PruneCriterion::kInSample;
            } else {
                throw ConfigError("prune_criterion must be held_out or in_sample");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(path->string() + ": " + e.what());
    }
    return cfg;
}

struct TrackArgs {
    fs::path seq;
    std::optional<fs::path> config;
    fs::path out = "results.json";
    std::optional<double> lambda;
    std::optional<double> label_sigma;
    std::optional<int> projection_dim;
    bool no_distill = false;
};

int run_track(const TrackArgs& a) {
    TrackerConfig cfg = load_config(a.config);
    if (a.lambda) cfg.lambda = *a.lambda;
    if (a.label_sigma) cfg.label_sigma = *a.label_sigma;
    if (a.projection_dim) cfg.projection_dim = *a.projection_dim;
    if (a.no_distill) cfg.distill = false;
    const Sequence seq = open_sequence(a.seq);
    const TrackRun run = track_frames([&seq](std::size_t i) { return seq.frame(i); }, seq.size(), seq.groundtruth.front(), cfg);
    write_results_json(a.out, a.seq.filename().string(), run.boxes, run.peaks, run.seconds, run.channels_used);
    double total = 0.0;
    for (double s : run.seconds) total += s;
    std::printf("tracked %zu frames, %d channels, %.1f fps -> %s\n", run.boxes.size(), run.channels_used,
                total > 0.0 ? static_cast<double>(run.boxes.size()) / total : 0.0, a.out.string().c_str());
    return 0;
}

struct EvalArgs {
    fs::path results;
    fs::path seq;
    fs::path out_dir = ".";
};

int run_eval(const EvalArgs& a) {
    TrackResult r = read_results_json(a.results);
    std::vector<Box> gt = read_groundtruth(a.seq / "groundtruth.txt");
    if (gt.size() < r.boxes.size()) throw DimensionError("ground truth shorter than the results");
    gt.resize(r.boxes.size());
    r.gt = std::move(gt);
    const PrecisionCurve p = precision_curve(r);
    const SuccessCurve s = success_curve(r);
    fs::create_directories(a.out_dir);
    write_curves_csv(a.out_dir / "curves.csv", p, s);
    const Summary sum = summarize(r);
    write_summary_json(a.out_dir / "summary.json", sum);
    std::printf("precision@20 %.4f  success auc %.4f  fps %.1f  channels %.1f  frames %zu\n", sum.precision20, sum.auc,
                sum.fps, sum.mean_channels, sum.frames);
    return 0;
}

struct SynthArgs {
    fs::path out;
    int frames = 30;
    int height = 160;
    int width = 160;
    int object = 32;
    double dx = 1.0;
    double dy = 0.5;
    std::uint64_t seed = 1;
    int noise_channels = 0;
    double noise_sigma = 30.0;
    int bins = 9;
};

int run_synth(const SynthArgs& a) {
    SynthSpec spec;
    spec.frames = a.frames;
    spec.frame_h = a.height;
    spec.frame_w = a.width;
    spec.object_h = a.object;
    spec.object_w = a.object;
    spec.motion = {{a.dx, a.dy}};
    spec.texture_seed = a.seed;
    spec.informative_channels = a.bins;
    spec.noise_channels = a.noise_channels;
    spec.noise_sigma = a.noise_channels > 0 ? a.noise_sigma : 0.0;
    const SynthSequence seq = generate_sequence(spec);
    write_sequence(a.out, seq.frames, seq.groundtruth);

    // Tracker config whose feature provider matches the generated channels.
    FeatureSpec base = FeatureSpec::make(Provider::kGradHist);
    base.bins = a.bins;
    const FeatureSpec fs = noisy_channel_provider(base, spec);
    std::ofstream cfg(a.out / "config.json");
    cfg << json{{"features", features_json(fs)}}.dump(2) << '\n';
    std::printf("wrote %d frames (%d informative + %d noise channels) to %s\n", a.frames, a.bins, a.noise_channels,
                a.out.string().c_str());
    return 0;
}

struct StudyArgs {
    fs::path seq;
    std::optional<fs::path> config;
    fs::path out_dir = ".";
    int frames = 2;
    std::optional<double> lambda;
    std::optional<double> label_sigma;
};

int run_study(const StudyArgs& a) {
    TrackerConfig cfg = load_config(a.config);
    if (a.lambda) cfg.lambda = *a.lambda;
    if (a.label_sigma) cfg.label_sigma = *a.label_sigma;
    cfg.validate();
    const Sequence seq = open_sequence(a.seq);
    if (a.frames < 2 || static_cast<std::size_t>(a.frames) > seq.size()) {
        throw ConfigError("--frames must lie in [2, sequence length]");
    }
    TrainingSet ts;
    for (int i = 0; i < a.frames; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const Patch p = extract_patch(seq.frame(k), seq.groundtruth.at(k), cfg.padding, cfg.out_h, cfg.out_w);
        ts.samples.push_back(featurize(p, cfg.features, i + 1));
    }
    const int h = ts.samples.front().height();
    const int w = ts.samples.front().width();
    ts.label = gaussian_label(LabelConfig{cfg.label_sigma, h, w}, h / cfg.padding, w / cfg.padding);
    ts.lambda = cfg.lambda;
    const TrainingSpectra sp(ts);
    const FreqFilter reference = solve_filter(sp, ChannelSelection::all(ts.channel_count()));
    DistillOptions opts;
    opts.max_rounds = cfg.max_rounds;
    opts.criterion = cfg.prune_criterion;
    opts.channel_budget = cfg.channel_budget;
    const DistillResult r = distill_channels(ts.samples, sp, opts, &reference);

    fs::create_directories(a.out_dir);
    {
        std::ofstream out(a.out_dir / "friendliness.csv");
        out << "channel,spatial,temporal,friendliness,rank\n";
        const std::vector<int> rank = r.report.rank_of();
        for (int l = 0; l < r.report.channel_count(); ++l) {
            const auto k = static_cast<std::size_t>(l);
            out << l << ',' << r.report.spatial[k] << ',' << r.report.temporal[k] << ',' << r.report.friendliness[k]
                << ',' << rank[k] << '\n';
        }
    }
    {
        std::ofstream out(a.out_dir / "loss_trace.csv");
        out.precision(17);
        out << "stage,step,channels,loss\n";
        int c = ts.channel_count();
        for (std::size_t k = 0; k < r.prune.scores.size(); ++k) {
            if (k > 0) --c;
            out << "prune," << k << ',' << (opts.channel_budget > 0 ? opts.channel_budget : c) << ','
                << r.prune.scores[k] << '\n';
        }
        for (std::size_t k = 0; k < r.alternation.loss_trace.size(); ++k) {
            out << "alternate," << k << ',' << r.selection().count() << ',' << r.alternation.loss_trace[k] << '\n';
        }
    }
    std::printf("selected %d of %d channels:", r.selection().count(), ts.channel_count());
    for (int l : r.selection().indices()) std::printf(" %d", l);
    std::printf("\nwrote %s and %s\n", (a.out_dir / "friendliness.csv").string().c_str(),
                (a.out_dir / "loss_trace.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation-filter tracker with channel distillation"};
    app.require_subcommand(1);

    TrackArgs track;
    auto* t = app.add_subcommand("track", "Track a sequence directory and write results.json");
    t->add_option("--seq", track.seq, "Sequence directory (img/ + groundtruth.txt)")->required()->check(CLI::ExistingDirectory);
    t->add_option("--config", track.config, "JSON tracker configuration")->check(CLI::ExistingFile);
    t->add_option("--out", track.out, "Output results file");
    t->add_option("--lambda", track.lambda, "Ridge regularisation");
    t->add_option("--label-sigma", track.label_sigma, "Label width as a fraction of the target size");
    t->add_option("--projection-dim", track.projection_dim, "PCA projection dimension (0 disables)");
    t->add_flag("--no-distill", track.no_distill, "Keep every channel");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score results.json against sequence ground truth");
    e->add_option("--results", ev.results, "results.json from track")->required()->check(CLI::ExistingFile);
    e->add_option("--seq", ev.seq, "Sequence directory")->required()->check(CLI::ExistingDirectory);
    e->add_option("--out-dir", ev.out_dir, "Where curves.csv and summary.json go");

    SynthArgs sy;
    auto* s = app.add_subcommand("synth", "Write a synthetic sequence directory");
    s->add_option("--out", sy.out, "Output directory")->required();
    s->add_option("--frames", sy.frames, "Frame count");
    s->add_option("--height", sy.height, "Frame height");
    s->add_option("--width", sy.width, "Frame width");
    s->add_option("--object", sy.object, "Object side length");
    s->add_option("--dx", sy.dx, "Horizontal motion per frame (px)");
    s->add_option("--dy", sy.dy, "Vertical motion per frame (px)");
    s->add_option("--seed", sy.seed, "Texture and noise seed");
    s->add_option("--bins", sy.bins, "Gradient-histogram bins (informative channels)");
    s->add_option("--noise-channels", sy.noise_channels, "Temporally independent noise channels");
    s->add_option("--noise-sigma", sy.noise_sigma, "Noise standard deviation");

    StudyArgs st;
    auto* d = app.add_subcommand("distill-study", "Channel friendliness and distillation loss trace");
    d->add_option("--seq", st.seq, "Sequence directory")->required()->check(CLI::ExistingDirectory);
    d->add_option("--config", st.config, "JSON tracker configuration")->check(CLI::ExistingFile);
    d->add_option("--out-dir", st.out_dir, "Where friendliness.csv and loss_trace.csv go");
    d->add_option("--frames", st.frames, "Leading frames used (at ground-truth boxes)");
    d->add_option("--lambda", st.lambda, "Ridge regularisation");
    d->add_option("--label-sigma", st.label_sigma, "Label width as a fraction of the target size");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*t) return run_track(track);
        if (*e) return run_eval(ev);
        if (*s) return run_synth(sy);
        if (*d) return run_study(st);
    } catch (const ConfigError& ex) {
        std::cerr << "configuration error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
