#include "cdtrack/dcf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cdtrack/errors.hpp"

namespace cdtrack {

// ---------------------------------------------------------------- selection

ChannelSelection::ChannelSelection(std::vector<std::uint8_t> mask) : mask_(std::move(mask)) {
    for (auto& m : mask_) m = m ? 1 : 0;
    count_ = static_cast<int>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

ChannelSelection ChannelSelection::all(int d) {
    return ChannelSelection(std::vector<std::uint8_t>(static_cast<std::size_t>(d), 1));
}

ChannelSelection ChannelSelection::none(int d) {
    return ChannelSelection(std::vector<std::uint8_t>(static_cast<std::size_t>(d), 0));
}

ChannelSelection ChannelSelection::of(int d, std::span<const int> channels) {
    ChannelSelection s = none(d);
    for (int l : channels) s.set(l, true);
    return s;
}

void ChannelSelection::set(int l, bool on) {
    auto& m = mask_.at(static_cast<std::size_t>(l));
    if (static_cast<bool>(m) != on) {
        count_ += on ? 1 : -1;
        m = on ? 1 : 0;
    }
}

std::vector<int> ChannelSelection::indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (int l = 0; l < size(); ++l) {
        if (mask_[static_cast<std::size_t>(l)]) out.push_back(l);
    }
    return out;
}

// ------------------------------------------------------------------- filter

int FreqFilter::find(int channel) const {
    auto it = std::lower_bound(channels.begin(), channels.end(), channel);
    if (it == channels.end() || *it != channel) return -1;
    return static_cast<int>(it - channels.begin());
}

Plane FreqFilter::spatial(int j) const { return idft2(planes.at(static_cast<std::size_t>(j))); }

void FreqFilter::validate() const {
    if (planes.size() != channels.size()) {
        throw InconsistentSelectionError("filter plane count differs from its channel map");
    }
    for (std::size_t j = 1; j < channels.size(); ++j) {
        if (channels[j] <= channels[j - 1]) {
            throw InconsistentSelectionError("filter channel map is not strictly increasing");
        }
    }
    for (const auto& p : planes) {
        if (p.height != planes.front().height || p.width != planes.front().width) {
            throw DimensionError("filter planes differ in shape");
        }
    }
}

FreqFilter restrict_filter(const FreqFilter& flt, const ChannelSelection& sel, int height, int width) {
    FreqFilter out;
    for (int l : sel.indices()) {
        const int j = flt.find(l);
        out.channels.push_back(l);
        out.planes.push_back(j >= 0 ? flt.planes[static_cast<std::size_t>(j)] : ComplexPlane(height, width));
    }
    return out;
}

// ------------------------------------------------------------- training set

void TrainingSet::validate() const {
    if (samples.empty()) throw DimensionError("training set has no samples");
    const int d = samples.front().channel_count();
    for (const auto& s : samples) {
        s.validate();
        if (s.channel_count() != d || s.height() != samples.front().height() ||
            s.width() != samples.front().width()) {
            throw DimensionError("training samples differ in shape");
        }
    }
    if (label.height != samples.front().height() || label.width != samples.front().width()) {
        throw DimensionError("label shape differs from samples");
    }
    if (!weights.empty()) {
        if (weights.size() != samples.size()) throw DimensionError("one weight per sample required");
        for (double b : weights) {
            if (!(b > 0.0)) throw ConfigError("sample weights must be positive");
        }
    }
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

TrainingSpectra::TrainingSpectra(const TrainingSet& ts) {
    ts.validate();
    features_.reserve(ts.samples.size());
    for (const auto& s : ts.samples) features_.push_back(dft2(s));
    label_ = dft2(ts.label);
    weights_.resize(ts.samples.size());
    for (int i = 0; i < ts.sample_count(); ++i) weights_[static_cast<std::size_t>(i)] = ts.weight(i);
    lambda_ = ts.lambda;
    channels_ = ts.channel_count();
}

TrainingSpectra::TrainingSpectra(std::vector<std::vector<ComplexPlane>> features, ComplexPlane label,
                                 std::vector<double> weights, double lambda)
    : features_(std::move(features)), label_(std::move(label)), weights_(std::move(weights)), lambda_(lambda) {
    if (features_.empty()) throw DimensionError("training set has no samples");
    channels_ = static_cast<int>(features_.front().size());
    if (weights_.empty()) weights_.assign(features_.size(), 1.0);
    if (weights_.size() != features_.size()) throw DimensionError("one weight per sample required");
}

TrainingSpectra TrainingSpectra::subset(std::span<const int> sample_ids) const {
    std::vector<std::vector<ComplexPlane>> f;
    std::vector<double> w;
    for (int i : sample_ids) {
        f.push_back(features_.at(static_cast<std::size_t>(i)));
        w.push_back(weights_.at(static_cast<std::size_t>(i)));
    }
    return TrainingSpectra(std::move(f), label_, std::move(w), lambda_);
}

// --------------------------------------------------------- small linalg

namespace {

// In-place solve of the n x n Hermitian system a x = b (a row-major).
// Cholesky first; on failure, Gaussian elimination with partial pivoting.
// Returns false when the system is numerically singular.
bool solve_small(std::vector<Complex>& a, std::vector<Complex>& b, int n, bool try_cholesky) {
    const auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[idx(i, i)]));
    if (scale == 0.0) return false;
    const double tiny = 1e-13 * scale;

    if (try_cholesky) {
        std::vector<Complex> l(a.size());
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            double diag = a[idx(j, j)].real();
            for (int k = 0; k < j; ++k) diag -= std::norm(l[idx(j, k)]);
            if (!(diag > tiny)) {
                ok = false;
                break;
            }
            const double ljj = std::sqrt(diag);
            l[idx(j, j)] = ljj;
            for (int i = j + 1; i < n; ++i) {
                Complex s = a[idx(i, j)];
                for (int k = 0; k < j; ++k) s -= l[idx(i, k)] * std::conj(l[idx(j, k)]);
                l[idx(i, j)] = s / ljj;
            }
        }
        if (ok) {
            for (int i = 0; i < n; ++i) {
                Complex s = b[static_cast<std::size_t>(i)];
                for (int k = 0; k < i; ++k) s -= l[idx(i, k)] * b[static_cast<std::size_t>(k)];
                b[static_cast<std::size_t>(i)] = s / l[idx(i, i)];
            }
            for (int i = n - 1; i >= 0; --i) {
                Complex s = b[static_cast<std::size_t>(i)];
                for (int k = i + 1; k < n; ++k) s -= std::conj(l[idx(k, i)]) * b[static_cast<std::size_t>(k)];
                b[static_cast<std::size_t>(i)] = s / l[idx(i, i)];
            }
            return true;
        }
    }

    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[idx(r, col)]) > std::abs(a[idx(piv, col)])) piv = r;
        }
        if (!(std::abs(a[idx(piv, col)]) > tiny)) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[idx(col, c)], a[idx(piv, c)]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const Complex f = a[idx(r, col)] / a[idx(col, col)];
            if (f == Complex{}) continue;
            for (int c = col; c < n; ++c) a[idx(r, c)] -= f * a[idx(col, c)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        Complex s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= a[idx(i, k)] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / a[idx(i, i)];
    }
    return true;
}

void check_selection(const TrainingSpectra& ts, const ChannelSelection& sel) {
    if (sel.size() != ts.channel_count()) {
        throw InconsistentSelectionError("selection length " + std::to_string(sel.size()) +
                                         " differs from channel count " + std::to_string(ts.channel_count()));
    }
}

}  // namespace

// -------------------------------------------------------- normal equations

NormalEquations::NormalEquations(int channels, int height, int width)
    : c_(channels), height_(height), width_(width), bins_(static_cast<std::size_t>(height) * width),
      gram_(bins_ * static_cast<std::size_t>(channels) * channels), rhs_(bins_ * static_cast<std::size_t>(channels)) {}

void NormalEquations::add_sample(std::span<const ComplexPlane* const> planes, const ComplexPlane& label,
                                 double weight) {
    if (static_cast<int>(planes.size()) != c_) throw DimensionError("add_sample: wrong channel count");
    const std::size_t cc = static_cast<std::size_t>(c_) * c_;
    std::vector<Complex> f(static_cast<std::size_t>(c_));
    for (std::size_t k = 0; k < bins_; ++k) {
        for (int a = 0; a < c_; ++a) f[static_cast<std::size_t>(a)] = planes[static_cast<std::size_t>(a)]->values[k];
        Complex* g = &gram_[k * cc];
        Complex* r = &rhs_[k * static_cast<std::size_t>(c_)];
        const Complex ybar = std::conj(label.values[k]);
        for (int a = 0; a < c_; ++a) {
            const Complex fa = weight * f[static_cast<std::size_t>(a)];
            r[a] += fa * ybar;
            for (int b = 0; b < c_; ++b) g[a * c_ + b] += fa * std::conj(f[static_cast<std::size_t>(b)]);
        }
    }
}

void NormalEquations::blend(const NormalEquations& other, double eta) {
    if (other.c_ != c_ || other.bins_ != bins_) throw DimensionError("blend: mismatched accumulators");
    for (std::size_t i = 0; i < gram_.size(); ++i) gram_[i] = (1.0 - eta) * gram_[i] + eta * other.gram_[i];
    for (std::size_t i = 0; i < rhs_.size(); ++i) rhs_[i] = (1.0 - eta) * rhs_[i] + eta * other.rhs_[i];
}

std::vector<ComplexPlane> NormalEquations::solve(double reg) const {
    std::vector<ComplexPlane> out(static_cast<std::size_t>(c_), ComplexPlane(height_, width_));
    const std::size_t cc = static_cast<std::size_t>(c_) * c_;
    std::vector<Complex> a(cc), b(static_cast<std::size_t>(c_));
    for (std::size_t k = 0; k < bins_; ++k) {
        std::copy_n(&gram_[k * cc], cc, a.begin());
        std::copy_n(&rhs_[k * static_cast<std::size_t>(c_)], c_, b.begin());
        for (int i = 0; i < c_; ++i) a[static_cast<std::size_t>(i) * c_ + i] += reg;
        if (!solve_small(a, b, c_, reg > 0.0)) {
            throw SingularityError("singular normal equations at frequency bin " + std::to_string(k), k);
        }
        for (int j = 0; j < c_; ++j) out[static_cast<std::size_t>(j)].values[k] = b[static_cast<std::size_t>(j)];
    }
    return out;
}

// ------------------------------------------------------------------ solving

FreqFilter solve_filter(const TrainingSet& ts, const ChannelSelection& sel) {
    return solve_filter(TrainingSpectra(ts), sel);
}

FreqFilter solve_filter(const TrainingSpectra& ts, const ChannelSelection& sel) {
    check_selection(ts, sel);
    if (sel.empty()) throw EmptySelectionError("cannot solve a filter over an empty channel selection");
    const std::vector<int> chans = sel.indices();
    const int c = static_cast<int>(chans.size());
    const int n = ts.sample_count();
    const double reg = ts.lambda() / c;

    FreqFilter flt;
    flt.channels = chans;

    if (n < c && reg > 0.0) {
        // Fewer samples than channels: solve the n x n dual system per bin,
        //   (K + reg W^-1) z = y 1,  K_ij = f_i^T conj(f_j),  h = sum_i f_i conj(z_i).
        flt.planes.assign(static_cast<std::size_t>(c), ComplexPlane(ts.height(), ts.width()));
        std::vector<Complex> k_mat(static_cast<std::size_t>(n) * n), z(static_cast<std::size_t>(n));
        std::vector<Complex> f(static_cast<std::size_t>(n) * c);
        for (std::size_t k = 0; k < ts.bins(); ++k) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < c; ++j) {
                    f[static_cast<std::size_t>(i) * c + j] = ts.feature(i, chans[static_cast<std::size_t>(j)]).values[k];
                }
            }
            for (int i = 0; i < n; ++i) {
                for (int i2 = 0; i2 < n; ++i2) {
                    Complex s{};
                    for (int j = 0; j < c; ++j) {
                        s += f[static_cast<std::size_t>(i) * c + j] * std::conj(f[static_cast<std::size_t>(i2) * c + j]);
                    }
                    k_mat[static_cast<std::size_t>(i) * n + i2] = s;
                }
                k_mat[static_cast<std::size_t>(i) * n + i] += reg / ts.weight(i);
                z[static_cast<std::size_t>(i)] = ts.label().values[k];
            }
            if (!solve_small(k_mat, z, n, true)) {
                throw SingularityError("singular dual system at frequency bin " + std::to_string(k), k);
            }
            for (int j = 0; j < c; ++j) {
                Complex h{};
                for (int i = 0; i < n; ++i) h += f[static_cast<std::size_t>(i) * c + j] * std::conj(z[static_cast<std::size_t>(i)]);
                flt.planes[static_cast<std::size_t>(j)].values[k] = h;
            }
        }
        return flt;
    }

    NormalEquations ne(c, ts.height(), ts.width());
    std::vector<const ComplexPlane*> planes(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) planes[static_cast<std::size_t>(j)] = &ts.feature(i, chans[static_cast<std::size_t>(j)]);
        ne.add_sample(planes, ts.label(), ts.weight(i));
    }
    flt.planes = ne.solve(reg);
    return flt;
}

// --------------------------------------------------------------------- loss

namespace {

std::vector<int> filter_positions(const TrainingSpectra& ts, const FreqFilter& flt, const ChannelSelection& sel) {
    check_selection(ts, sel);
    flt.validate();
    std::vector<int> pos;
    for (int l : sel.indices()) {
        const int j = flt.find(l);
        if (j < 0) {
            throw InconsistentSelectionError("selected channel " + std::to_string(l) + " has no filter plane");
        }
        const auto& p = flt.planes[static_cast<std::size_t>(j)];
        if (p.height != ts.height() || p.width != ts.width()) throw DimensionError("filter shape differs from data");
        pos.push_back(j);
    }
    return pos;
}

double residual_energy(const TrainingSpectra& ts, int i, const FreqFilter& flt, std::span<const int> chans,
                       std::span<const int> pos) {
    double e = 0.0;
    for (std::size_t k = 0; k < ts.bins(); ++k) {
        Complex s = -ts.label().values[k];
        for (std::size_t j = 0; j < chans.size(); ++j) {
            s += ts.feature(i, chans[j]).values[k] * std::conj(flt.planes[static_cast<std::size_t>(pos[j])].values[k]);
        }
        e += std::norm(s);
    }
    return e / static_cast<double>(ts.bins());
}

}  // namespace

double loss(const TrainingSet& ts, const FreqFilter& flt, const ChannelSelection& sel) {
    return loss(TrainingSpectra(ts), flt, sel);
}

double loss(const TrainingSpectra& ts, const FreqFilter& flt, const ChannelSelection& sel) {
    const std::vector<int> pos = filter_positions(ts, flt, sel);
    const std::vector<int> chans = sel.indices();
    double data = 0.0;
    for (int i = 0; i < ts.sample_count(); ++i) data += ts.weight(i) * residual_energy(ts, i, flt, chans, pos);
    if (sel.empty()) return data;
    double energy = 0.0;
    for (int j : pos) energy += sum_squares(flt.planes[static_cast<std::size_t>(j)]);
    return data + ts.lambda() / sel.count() * energy / static_cast<double>(ts.bins());
}

double sample_residual(const TrainingSpectra& ts, int sample, const FreqFilter& flt, const ChannelSelection& sel) {
    const std::vector<int> pos = filter_positions(ts, flt, sel);
    const std::vector<int> chans = sel.indices();
    return residual_energy(ts, sample, flt, chans, pos);
}

// ----------------------------------------------------------------- response

Plane response(const FeatureMap& f, const FreqFilter& flt, const ChannelSelection& sel) {
    f.validate();
    if (sel.size() != f.channel_count()) throw InconsistentSelectionError("selection length differs from channels");
    const FreqFilter sub = restrict_filter(flt, sel, f.height(), f.width());
    for (int l : sel.indices()) {
        if (flt.find(l) < 0) throw InconsistentSelectionError("selected channel has no filter plane");
    }
    std::vector<ComplexPlane> spectra(static_cast<std::size_t>(f.channel_count()));
    for (int l : sel.indices()) spectra[static_cast<std::size_t>(l)] = dft2(f[static_cast<std::size_t>(l)]);
    return response(spectra, sub);
}

Plane response(const std::vector<ComplexPlane>& spectra, const FreqFilter& flt) {
    flt.validate();
    if (flt.planes.empty()) throw EmptySelectionError("response of an empty filter");
    const int h = flt.planes.front().height;
    const int w = flt.planes.front().width;
    ComplexPlane acc(h, w);
    for (std::size_t j = 0; j < flt.planes.size(); ++j) {
        const auto l = static_cast<std::size_t>(flt.channels[j]);
        if (l >= spectra.size()) throw InconsistentSelectionError("filter channel beyond feature channels");
        const ComplexPlane& fs = spectra[l];
        if (fs.height != h || fs.width != w) throw DimensionError("feature shape differs from filter");
        const ComplexPlane& hp = flt.planes[j];
        for (std::size_t k = 0; k < acc.size(); ++k) acc.values[k] += fs.values[k] * std::conj(hp.values[k]);
    }
    return idft2(acc);
}

Offset locate(const Plane& r) {
    if (r.size() == 0) throw DimensionError("locate: empty response");
    std::size_t best = 0;
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (r.values[k] > r.values[best]) best = k;
    }
    const int row = static_cast<int>(best / static_cast<std::size_t>(r.width));
    const int col = static_cast<int>(best % static_cast<std::size_t>(r.width));
    Offset o;
    o.dy = 2 * row > r.height ? row - r.height : row;
    o.dx = 2 * col > r.width ? col - r.width : col;
    return o;
}

}  // namespace cdtrack
