#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cdtrack/features.hpp"

namespace cdtrack {

struct Motion {
    double dx = 0.0;
    double dy = 0.0;
};

struct SynthSpec {
    int frames = 10;
    int frame_h = 160;
    int frame_w = 160;
    int object_h = 32;
    int object_w = 32;
    // Displacement from frame i to frame i+1; a single entry is repeated.
    std::vector<Motion> motion{{0.0, 0.0}};
    std::uint64_t texture_seed = 1;
    int informative_channels = 8;
    int noise_channels = 0;
    double noise_sigma = 0.0;
    // Top-left of the object in frame 1; negative means centered.
    double start_x = -1.0;
    double start_y = -1.0;

    Motion motion_at(int i) const;
    void validate() const;
};

struct SynthSequence {
    std::vector<Image> frames;
    std::vector<Box> groundtruth;
};

// Textured object translated over a lower-contrast textured background.
// Object positions are kept on a 1/256-pixel grid and pixel values on the
// 8-bit grid, so writing and re-reading the sequence is lossless.
SynthSequence generate_sequence(const SynthSpec& spec);

// `base` followed by spec.noise_channels Gaussian channels (sigma =
// spec.noise_sigma) re-drawn every frame.
FeatureSpec noisy_channel_provider(const FeatureSpec& base, const SynthSpec& spec);

}  // namespace cdtrack
