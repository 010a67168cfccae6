#include "cdtrack/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "cdtrack/errors.hpp"

namespace cdtrack {

std::uint64_t fingerprint(const FreqFilter& flt) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (int c : flt.channels) mix(&c, sizeof c);
    for (const auto& p : flt.planes) {
        mix(&p.height, sizeof p.height);
        mix(&p.width, sizeof p.width);
        mix(p.values.data(), p.values.size() * sizeof(Complex));
    }
    return h;
}

SelectionSearchState build_search_state(const TrainingSpectra& ts, const FreqFilter& flt,
                                        const ChannelSelection& current, std::span<const int> ranking) {
    const int d = ts.channel_count();
    if (current.size() != d) throw InconsistentSelectionError("selection length differs from channel count");
    if (!ranking.empty() && static_cast<int>(ranking.size()) != d) {
        throw DimensionError("ranking length differs from channel count");
    }
    flt.validate();

    SelectionSearchState st;
    st.current = current;
    st.target = ts.label();
    st.weights = ts.weights();
    st.lambda = ts.lambda();
    st.gamma.assign(static_cast<std::size_t>(d), 0.0);
    st.contribution.resize(static_cast<std::size_t>(d));
    st.filter_fingerprint = fingerprint(flt);

    for (int l = 0; l < d; ++l) {
        const int j = flt.find(l);
        if (j < 0) continue;
        const ComplexPlane& h = flt.planes[static_cast<std::size_t>(j)];
        if (h.height != ts.height() || h.width != ts.width()) throw DimensionError("filter shape differs from data");
        st.gamma[static_cast<std::size_t>(l)] = sum_squares(h);
        auto& per_sample = st.contribution[static_cast<std::size_t>(l)];
        per_sample.reserve(static_cast<std::size_t>(ts.sample_count()));
        for (int i = 0; i < ts.sample_count(); ++i) {
            ComplexPlane a(ts.height(), ts.width());
            const ComplexPlane& f = ts.feature(i, l);
            for (std::size_t k = 0; k < a.size(); ++k) a.values[k] = f.values[k] * std::conj(h.values[k]);
            per_sample.push_back(std::move(a));
        }
    }

    std::vector<int> order(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l) order[static_cast<std::size_t>(l)] = l;
    if (!ranking.empty()) order.assign(ranking.begin(), ranking.end());
    for (int l : order) {
        if (current.contains(l)) st.ranked_good.push_back(l);
    }
    for (int l = 0; l < d; ++l) {
        if (!current.contains(l)) st.complement.push_back(l);
    }
    return st;
}

double selection_loss(const SelectionSearchState& st, const ChannelSelection& sel) {
    if (sel.size() != st.channel_count()) throw InconsistentSelectionError("selection length differs from cache");
    const std::vector<int> chans = sel.indices();
    const std::size_t m = st.bins();
    double data = 0.0;
    for (std::size_t i = 0; i < st.weights.size(); ++i) {
        double e = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            Complex s = -st.target.values[k];
            for (int l : chans) {
                const auto& a = st.contribution[static_cast<std::size_t>(l)];
                if (!a.empty()) s += a[i].values[k];
            }
            e += std::norm(s);
        }
        data += st.weights[i] * (e / static_cast<double>(m));
    }
    if (chans.empty()) return data;
    double energy = 0.0;
    for (int l : chans) energy += st.gamma[static_cast<std::size_t>(l)];
    return data + st.lambda / static_cast<double>(chans.size()) * energy / static_cast<double>(m);
}

double selection_loss(const SelectionSearchState& st, const ChannelSelection& sel, const FreqFilter& flt) {
    if (fingerprint(flt) != st.filter_fingerprint) {
        throw StaleCacheError("selection caches were built from a different filter");
    }
    return selection_loss(st, sel);
}

ChannelSelection swap_search(const SelectionSearchState& st) {
    const std::size_t m = st.bins();
    const std::size_t n = st.weights.size();
    const int c = st.current.count();
    if (c == 0) return st.current;
    const double inv_m = 1.0 / static_cast<double>(m);
    const double reg = st.lambda / c * inv_m;

    // Running residuals R_i = sum_{l in sel} A_il - B.
    std::vector<std::vector<Complex>> resid(n, std::vector<Complex>(m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) resid[i][k] = -st.target.values[k];
    }
    double energy = 0.0;
    const auto contrib = [&st](int l) -> const std::vector<ComplexPlane>& {
        return st.contribution[static_cast<std::size_t>(l)];
    };
    for (int l : st.current.indices()) {
        energy += st.gamma[static_cast<std::size_t>(l)];
        if (contrib(l).empty()) continue;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) resid[i][k] += contrib(l)[i].values[k];
        }
    }
    const auto swapped_loss = [&](int out, int in) {
        const auto& a_out = contrib(out);
        const auto& a_in = contrib(in);
        double data = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                Complex s = resid[i][k];
                if (!a_out.empty()) s -= a_out[i].values[k];
                if (!a_in.empty()) s += a_in[i].values[k];
                e += std::norm(s);
            }
            data += st.weights[i] * e * inv_m;
        }
        return data + reg * (energy - st.gamma[static_cast<std::size_t>(out)] + st.gamma[static_cast<std::size_t>(in)]);
    };
    double current_loss = reg * energy;
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        for (const auto& v : resid[i]) e += std::norm(v);
        current_loss += st.weights[i] * e * inv_m;
    }

    ChannelSelection sel = st.current;
    std::vector<int> ranked = st.ranked_good;
    std::vector<int> comp = st.complement;
    for (int p = static_cast<int>(ranked.size()) - 1; p >= 0; --p) {
        const int out = ranked[static_cast<std::size_t>(p)];
        int best_in = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int in : comp) {
            const double v = swapped_loss(out, in);
            if (v < best) {
                best = v;
                best_in = in;
            }
        }
        // Commit only on a decrease that is not rounding noise.
        if (best_in < 0 || !(best < current_loss - 1e-12 * std::abs(current_loss))) continue;

        const auto& a_out = contrib(out);
        const auto& a_in = contrib(best_in);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                if (!a_out.empty()) resid[i][k] -= a_out[i].values[k];
                if (!a_in.empty()) resid[i][k] += a_in[i].values[k];
            }
        }
        energy += st.gamma[static_cast<std::size_t>(best_in)] - st.gamma[static_cast<std::size_t>(out)];
        current_loss = best;
        sel.set(out, false);
        sel.set(best_in, true);
        ranked[static_cast<std::size_t>(p)] = best_in;
        comp.erase(std::find(comp.begin(), comp.end(), best_in));
        comp.insert(std::lower_bound(comp.begin(), comp.end(), out), out);
    }
    return sel;
}

namespace {

// Planes of `flt` for its channels plus reference planes for the remaining
// channels the reference covers.
FreqFilter augment(const FreqFilter& flt, const FreqFilter* reference) {
    if (reference == nullptr) return flt;
    FreqFilter out;
    std::vector<int> chans = flt.channels;
    for (int l : reference->channels) {
        if (flt.find(l) < 0) chans.push_back(l);
    }
    std::sort(chans.begin(), chans.end());
    for (int l : chans) {
        const int j = flt.find(l);
        out.channels.push_back(l);
        out.planes.push_back(j >= 0 ? flt.planes[static_cast<std::size_t>(j)]
                                    : reference->planes[static_cast<std::size_t>(reference->find(l))]);
    }
    return out;
}

}  // namespace

AlternationResult alternate(const TrainingSpectra& ts, const ChannelSelection& seed, int max_rounds,
                            std::span<const int> ranking, const FreqFilter* reference) {
    if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (seed.empty()) throw EmptySelectionError("alternation needs a nonempty seed");

    AlternationResult res;
    ChannelSelection sel = seed;
    FreqFilter flt = solve_filter(ts, sel);
    double current = loss(ts, flt, sel);
    res.loss_trace.push_back(current);
    res.filter = flt;
    res.selection = sel;
    res.loss = current;
    double previous_post = current;

    for (int round = 1; round <= max_rounds; ++round) {
        if (round > 1) {
            flt = solve_filter(ts, sel);
            current = loss(ts, flt, sel);
            res.loss_trace.push_back(current);
            if (current < res.loss) {
                res.loss = current;
                res.filter = flt;
                res.selection = sel;
            }
        }
        const FreqFilter aug = augment(flt, reference);
        const SelectionSearchState st = build_search_state(ts, aug, sel, ranking);
        const ChannelSelection next = swap_search(st);
        const double post = selection_loss(st, next);
        res.loss_trace.push_back(post);
        res.rounds = round;
        if (post < res.loss) {
            res.loss = post;
            res.filter = restrict_filter(aug, next, ts.height(), ts.width());
            res.selection = next;
        }
        sel = next;
        if (std::abs(previous_post - post) < kAlternationTolerance) break;
        previous_post = post;
    }
    return res;
}

AlternationResult alternate(const TrainingSet& ts, const ChannelSelection& seed, int max_rounds) {
    return alternate(TrainingSpectra(ts), seed, max_rounds);
}

DistillResult distill_channels(std::span<const FeatureMap> seed_frames, const TrainingSpectra& ts,
                               const DistillOptions& opts, const FreqFilter* reference) {
    DistillResult out;
    out.report = average_friendliness(seed_frames);
    if (out.report.channel_count() != ts.channel_count()) {
        throw DimensionError("seed frames and training set differ in channel count");
    }
    const int d = ts.channel_count();
    if (opts.channel_budget > 0) {
        if (opts.channel_budget > d) throw ConfigError("channel budget exceeds the channel count");
        out.prune.selection = ChannelSelection::none(d);
        for (int k = 0; k < opts.channel_budget; ++k) out.prune.selection.set(out.report.ranking[static_cast<std::size_t>(k)], true);
        out.prune.scores.push_back(selection_score(ts, out.prune.selection, opts.criterion));
        for (int k = d - 1; k >= opts.channel_budget; --k) out.prune.dropped.push_back(out.report.ranking[static_cast<std::size_t>(k)]);
    } else {
        const int iters = opts.prune_max_iters < 0 ? d - 1 : opts.prune_max_iters;
        out.prune = prune_by_ranking(ts, out.report.ranking, iters, opts.criterion);
    }
    out.alternation = alternate(ts, out.prune.selection, opts.max_rounds, out.report.ranking, reference);
    return out;
}

}  // namespace cdtrack
