#pragma once

#include <span>
#include <vector>

#include "cdtrack/dcf.hpp"
#include "cdtrack/distill.hpp"
#include "cdtrack/tensor.hpp"

namespace cdtrack {

// d x q channel compression matrix with unit-norm columns.
struct Projection {
    int d = 0;
    int q = 0;
    std::vector<double> matrix;  // row-major d x q
    bool rank_deficient = false; // trailing columns are an arbitrary orthonormal completion

    double at(int l, int j) const { return matrix[static_cast<std::size_t>(l) * q + j]; }
    double& at(int l, int j) { return matrix[static_cast<std::size_t>(l) * q + j]; }
    void validate() const;
};

// Top-q principal directions of the per-pixel channel vectors pooled over
// every sample (mean removed). Column signs are fixed so that each column's
// largest-magnitude entry is positive.
Projection pca_projection(std::span<const FeatureMap> samples, int q);

// First q columns of the d x d identity.
Projection identity_projection(int d, int q);

// g_j(pixel) = sum_l P(l, j) f_l(pixel)
FeatureMap project(const FeatureMap& f, const Projection& p);

// Projects the training samples and seed frames, then runs the channel
// distillation pipeline on the q projected channels.
DistillResult distill_projected(const TrainingSet& ts, const Projection& p, std::span<const FeatureMap> seed_frames,
                                const DistillOptions& opts);

}  // namespace cdtrack
