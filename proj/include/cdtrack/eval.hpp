#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdtrack/features.hpp"

namespace cdtrack {

struct TrackResult {
    std::vector<Box> boxes;
    std::vector<Box> gt;
    std::vector<double> timings;
    int channels_used = 0;

    void validate() const;
};

double center_error(const Box& a, const Box& b);
double iou(const Box& a, const Box& b);

struct PrecisionCurve {
    std::vector<double> thresholds;  // 0..50 px, step 1
    std::vector<double> values;      // fraction of frames with center error <= threshold
    double score = 0.0;              // value at 20 px
};

struct SuccessCurve {
    std::vector<double> thresholds;  // 0..1, step 0.01, both ends included
    std::vector<double> values;      // fraction of frames with IoU > threshold
    double auc = 0.0;                // mean of values
};

PrecisionCurve precision_curve(const TrackResult& r);
SuccessCurve success_curve(const TrackResult& r);
// Curves from per-frame center errors / overlaps directly.
PrecisionCurve precision_curve(std::span<const double> errors);
SuccessCurve success_curve(std::span<const double> overlaps);

struct Summary {
    double precision20 = 0.0;
    double auc = 0.0;
    double fps = 0.0;
    double mean_channels = 0.0;
    std::size_t frames = 0;
};

Summary summarize(const TrackResult& r);

// results.json: {"sequence", "channels_used", "fps", "frames": [{"frame",
// "box": [x, y, w, h] (1-based top-left), "peak", "seconds"}]}
void write_results_json(const std::filesystem::path& path, const std::string& sequence, const std::vector<Box>& boxes,
                        const std::vector<double>& peaks, const std::vector<double>& seconds, int channels_used);
// Boxes come back 0-based.
TrackResult read_results_json(const std::filesystem::path& path);

void write_curves_csv(const std::filesystem::path& path, const PrecisionCurve& p, const SuccessCurve& s);
void write_summary_json(const std::filesystem::path& path, const Summary& s);

}  // namespace cdtrack
