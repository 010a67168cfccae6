#include "cdtrack/labels.hpp"

#include <cmath>
#include <string>

#include "cdtrack/errors.hpp"

namespace cdtrack {

Plane gaussian_label_sigma(int height, int width, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("label sigma must be positive, got " + std::to_string(sigma));
    }
    Plane y(height, width);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int r = 0; r < height; ++r) {
        const double dr = std::min(r, height - r);
        for (int c = 0; c < width; ++c) {
            const double dc = std::min(c, width - c);
            y.at(r, c) = std::exp(-(dr * dr + dc * dc) * inv);
        }
    }
    return y;
}

Plane gaussian_label(const LabelConfig& cfg, double target_h, double target_w) {
    if (!(cfg.sigma_factor > 0.0 && cfg.sigma_factor < 1.0)) {
        throw ConfigError("sigma_factor must lie in (0, 1)");
    }
    if (!(target_h > 0.0 && target_w > 0.0)) {
        throw ConfigError("target dimensions must be positive");
    }
    return gaussian_label_sigma(cfg.height, cfg.width, cfg.sigma_factor * std::sqrt(target_h * target_w));
}

}  // namespace cdtrack
