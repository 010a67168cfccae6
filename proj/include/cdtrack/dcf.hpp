#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdtrack/tensor.hpp"

namespace cdtrack {

// Binary channel mask over d feature channels.
class ChannelSelection {
public:
    ChannelSelection() = default;
    explicit ChannelSelection(std::vector<std::uint8_t> mask);

    static ChannelSelection all(int d);
    static ChannelSelection none(int d);
    static ChannelSelection of(int d, std::span<const int> channels);

    int size() const noexcept { return static_cast<int>(mask_.size()); }
    int count() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    bool contains(int l) const { return mask_.at(static_cast<std::size_t>(l)) != 0; }
    void set(int l, bool on);

    // Selected channel indices, ascending.
    std::vector<int> indices() const;
    std::span<const std::uint8_t> mask() const noexcept { return mask_; }

    bool operator==(const ChannelSelection& o) const { return mask_ == o.mask_; }

private:
    std::vector<std::uint8_t> mask_;
    int count_ = 0;
};

// Frequency-domain filter: one spectrum per channel in `channels`
// (strictly increasing original channel indices).
struct FreqFilter {
    std::vector<ComplexPlane> planes;
    std::vector<int> channels;

    int plane_count() const noexcept { return static_cast<int>(planes.size()); }
    // Position of `channel` in `channels`, or -1.
    int find(int channel) const;
    // Spatial filter of plane j.
    Plane spatial(int j) const;
    void validate() const;
};

// Keeps only the planes of selected channels; selected channels the filter
// does not cover get zero planes.
FreqFilter restrict_filter(const FreqFilter& flt, const ChannelSelection& sel, int height, int width);

struct TrainingSet {
    std::vector<FeatureMap> samples;
    Plane label;                  // shared desired response y
    std::vector<double> weights;  // beta_i; empty means all ones
    double lambda = 1e-2;

    int sample_count() const noexcept { return static_cast<int>(samples.size()); }
    int channel_count() const noexcept { return samples.empty() ? 0 : samples.front().channel_count(); }
    double weight(int i) const { return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)]; }
    void validate() const;
};

// Spectra of every sample channel and of the label, computed once and shared
// by every solve and loss evaluation over the same training set.
class TrainingSpectra {
public:
    explicit TrainingSpectra(const TrainingSet& ts);
    TrainingSpectra(std::vector<std::vector<ComplexPlane>> features, ComplexPlane label,
                    std::vector<double> weights, double lambda);

    int sample_count() const noexcept { return static_cast<int>(features_.size()); }
    int channel_count() const noexcept { return channels_; }
    int height() const noexcept { return label_.height; }
    int width() const noexcept { return label_.width; }
    std::size_t bins() const noexcept { return label_.size(); }
    double lambda() const noexcept { return lambda_; }
    double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const ComplexPlane& feature(int i, int l) const {
        return features_[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
    }
    const std::vector<ComplexPlane>& sample(int i) const { return features_[static_cast<std::size_t>(i)]; }
    const ComplexPlane& label() const noexcept { return label_; }

    // Same data restricted to the listed samples (used for held-out scoring).
    TrainingSpectra subset(std::span<const int> sample_ids) const;

private:
    std::vector<std::vector<ComplexPlane>> features_;
    ComplexPlane label_;
    std::vector<double> weights_;
    double lambda_ = 0.0;
    int channels_ = 0;
};

// Per-bin normal equations of the selected-channel ridge regression:
//   gram(k) = sum_i beta_i f_i(k) f_i(k)^H,   rhs(k) = sum_i beta_i f_i(k) conj(y(k)).
// Solving (reg I + gram(k)) h(k) = rhs(k) at every bin gives the filter.
class NormalEquations {
public:
    NormalEquations() = default;
    NormalEquations(int channels, int height, int width);

    int channels() const noexcept { return c_; }
    std::size_t bins() const noexcept { return bins_; }

    // `planes` holds the c selected-channel spectra of one sample.
    void add_sample(std::span<const ComplexPlane* const> planes, const ComplexPlane& label, double weight);
    // this = (1 - eta) * this + eta * other
    void blend(const NormalEquations& other, double eta);

    // Throws SingularityError naming the first bin that cannot be solved.
    std::vector<ComplexPlane> solve(double reg) const;

    const std::vector<Complex>& gram() const noexcept { return gram_; }
    const std::vector<Complex>& rhs() const noexcept { return rhs_; }

private:
    int c_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::size_t bins_ = 0;
    std::vector<Complex> gram_;  // bins x c x c, row-major per bin
    std::vector<Complex> rhs_;   // bins x c
};

// Minimizer of the selected-channel ridge loss; regularizer lambda / c.
FreqFilter solve_filter(const TrainingSet& ts, const ChannelSelection& sel);
FreqFilter solve_filter(const TrainingSpectra& ts, const ChannelSelection& sel);

// (1/m) sum_i beta_i ||sum_l a_l f_il . conj(h_l) - y||^2 + (lambda/c)(1/m) sum_l a_l ||h_l||^2
double loss(const TrainingSet& ts, const FreqFilter& flt, const ChannelSelection& sel);
double loss(const TrainingSpectra& ts, const FreqFilter& flt, const ChannelSelection& sel);

// Data term of one sample only, (1/m)||sum_l f_l . conj(h_l) - y||^2.
double sample_residual(const TrainingSpectra& ts, int sample, const FreqFilter& flt, const ChannelSelection& sel);

// Correlation response idft2(sum_j f_Cj . conj(h_j)) over the selected channels.
Plane response(const FeatureMap& f, const FreqFilter& flt, const ChannelSelection& sel);
Plane response(const std::vector<ComplexPlane>& spectra, const FreqFilter& flt);

struct Offset {
    int dy = 0;
    int dx = 0;
    bool operator==(const Offset&) const = default;
};

// Peak of a response map as a signed wrap-around offset; ties go to the
// smallest row, then the smallest column.
Offset locate(const Plane& r);

}  // namespace cdtrack
