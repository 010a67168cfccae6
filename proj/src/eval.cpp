#include "cdtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "cdtrack/errors.hpp"

namespace cdtrack {

using nlohmann::json;

void TrackResult::validate() const {
    if (boxes.size() != gt.size()) throw DimensionError("track result and ground truth differ in length");
    if (!timings.empty() && timings.size() != boxes.size()) throw DimensionError("timings must cover every frame");
    if (!boxes.empty()) {
        const Box& a = boxes.front();
        const Box& b = gt.front();
        const double tol = 1e-6;
        if (std::abs(a.x - b.x) > tol || std::abs(a.y - b.y) > tol || std::abs(a.w - b.w) > tol || std::abs(a.h - b.h) > tol) {
            throw DimensionError("first predicted box must equal the first ground-truth box");
        }
    }
}

double center_error(const Box& a, const Box& b) { return std::hypot(a.cx() - b.cx(), a.cy() - b.cy()); }

double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

PrecisionCurve precision_curve(const TrackResult& r) {
    r.validate();
    std::vector<double> err(r.boxes.size());
    for (std::size_t i = 0; i < err.size(); ++i) err[i] = center_error(r.boxes[i], r.gt[i]);
    return precision_curve(err);
}

PrecisionCurve precision_curve(std::span<const double> err) {
    PrecisionCurve p;
    for (int t = 0; t <= 50; ++t) {
        p.thresholds.push_back(t);
        const auto hits = std::count_if(err.begin(), err.end(), [t](double e) { return e <= t; });
        p.values.push_back(err.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(err.size()));
    }
    p.score = p.values[20];
    return p;
}

SuccessCurve success_curve(const TrackResult& r) {
    r.validate();
    std::vector<double> ov(r.boxes.size());
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = iou(r.boxes[i], r.gt[i]);
    return success_curve(ov);
}

SuccessCurve success_curve(std::span<const double> ov) {
    SuccessCurve s;
    for (int k = 0; k <= 100; ++k) {
        const double t = k / 100.0;
        s.thresholds.push_back(t);
        const auto hits = std::count_if(ov.begin(), ov.end(), [t](double o) { return o > t; });
        s.values.push_back(ov.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ov.size()));
    }
    s.auc = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(s.values.size());
    return s;
}

Summary summarize(const TrackResult& r) {
    Summary s;
    s.precision20 = precision_curve(r).score;
    s.auc = success_curve(r).auc;
    s.frames = r.boxes.size();
    const double total = std::accumulate(r.timings.begin(), r.timings.end(), 0.0);
    s.fps = total > 0.0 ? static_cast<double>(r.timings.size()) / total : 0.0;
    s.mean_channels = r.channels_used;
    return s;
}

void write_results_json(const std::filesystem::path& path, const std::string& sequence, const std::vector<Box>& boxes,
                        const std::vector<double>& peaks, const std::vector<double>& seconds, int channels_used) {
    if (peaks.size() != boxes.size() || seconds.size() != boxes.size()) {
        throw DimensionError("results need one peak and one timing per box");
    }
    json frames = json::array();
    double total = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Box& b = boxes[i];
        frames.push_back({{"frame", i + 1}, {"box", {b.x + 1.0, b.y + 1.0, b.w, b.h}}, {"peak", peaks[i]}, {"seconds", seconds[i]}});
        total += seconds[i];
    }
    json doc{{"sequence", sequence},
             {"channels_used", channels_used},
             {"fps", total > 0.0 ? static_cast<double>(boxes.size()) / total : 0.0},
             {"frames", frames}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

TrackResult read_results_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    json doc;
    try {
        in >> doc;
        TrackResult r;
        r.channels_used = doc.at("channels_used").get<int>();
        for (const auto& f : doc.at("frames")) {
            const auto& b = f.at("box");
            r.boxes.push_back(Box{b.at(0).get<double>() - 1.0, b.at(1).get<double>() - 1.0, b.at(2).get<double>(),
                                  b.at(3).get<double>()});
            r.timings.push_back(f.at("seconds").get<double>());
        }
        return r;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_curves_csv(const std::filesystem::path& path, const PrecisionCurve& p, const SuccessCurve& s) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    // The two curves live on different grids: precision rows leave success empty and vice versa.
    out << "threshold,precision,success\n";
    for (std::size_t i = 0; i < p.values.size(); ++i) out << p.thresholds[i] << ',' << p.values[i] << ",\n";
    for (std::size_t i = 0; i < s.values.size(); ++i) out << s.thresholds[i] << ",," << s.values[i] << '\n';
}

void write_summary_json(const std::filesystem::path& path, const Summary& s) {
    json doc{{"precision_at_20", s.precision20},
             {"success_auc", s.auc},
             {"fps", s.fps},
             {"mean_channels", s.mean_channels},
             {"frames", s.frames}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace cdtrack
