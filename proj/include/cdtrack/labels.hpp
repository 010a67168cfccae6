#pragma once

#include "cdtrack/tensor.hpp"

namespace cdtrack {

struct LabelConfig {
    double sigma_factor = 0.1;  // fraction of the target's geometric-mean size
    int height = 0;
    int width = 0;
};

// Periodic Gaussian regression target with its unit peak at cell (0, 0).
// sigma = sigma_factor * sqrt(target_h * target_w), all in label cells.
Plane gaussian_label(const LabelConfig& cfg, double target_h, double target_w);

// Same, with sigma given directly.
Plane gaussian_label_sigma(int height, int width, double sigma);

}  // namespace cdtrack
