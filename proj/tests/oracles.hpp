#pragma once

// Slow reference implementations used only by the tests. None of them call
// the library's transforms or solvers.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "cdtrack/dcf.hpp"
#include "cdtrack/tensor.hpp"

namespace oracle {

using cdtrack::Complex;
using cdtrack::ComplexPlane;
using cdtrack::FeatureMap;
using cdtrack::Plane;

// Direct O(m^2) forward DFT, X(u,v) = sum x(r,c) exp(-2 pi i (ur/H + vc/W)).
ComplexPlane dft(const Plane& p);
// Direct circular cross-correlation c(p) = sum_q a(p + q) b(q).
Plane correlate(const Plane& a, const Plane& b);

Plane random_plane(std::mt19937_64& rng, int h, int w, double scale = 1.0);
FeatureMap random_map(std::mt19937_64& rng, int d, int h, int w, double scale = 1.0);
cdtrack::TrainingSet random_training_set(std::mt19937_64& rng, int n, int d, int h, int w, double lambda,
                                         bool random_weights = true);

// Spatial filters minimising sum_i beta_i ||sum_l corr(f_il, h_l) - y||^2 + (lambda/c) sum_l ||h_l||^2
// over the selected channels, by a dense (c m) x (c m) solve of the normal equations.
std::vector<Plane> dense_ridge(const cdtrack::TrainingSet& ts, const cdtrack::ChannelSelection& sel);

// Same objective evaluated in the pixel domain for given spatial filters.
double spatial_loss(const cdtrack::TrainingSet& ts, const std::vector<Plane>& h, const cdtrack::ChannelSelection& sel);

// Spatial filters of a frequency-domain filter, by direct inverse DFT.
std::vector<Plane> spatial_filters(const cdtrack::FreqFilter& flt);

double max_abs_diff(const Plane& a, const Plane& b);
double max_abs(const Plane& a);

}  // namespace oracle
