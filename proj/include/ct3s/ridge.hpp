#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ct3s/transform.hpp"
#include "ct3s/window.hpp"

namespace ct3s {

// Parameters of the separation scheme. threshold resolves against the
// per-slice max when threshold_is_fraction; rho and delta are the metric
// weight and cluster cutoff of the separation condition. The tracker fields
// control the per-component search box around the motion-model prediction,
// the prediction fit window, and the interference tolerances at which a
// slice is flagged instead of trusted.
struct SeparationParams {
    double threshold = 0.3;
    bool threshold_is_fraction = true;
    double rho = 0.15;       // seconds
    double delta = 0.5;      // Hz
    int expected_components = 1;
    bool expect_trend = false;

    double box_eta = 0.25;          // Hz, search half-width around prediction
    double box_lambda = 0.25;       // Hz/s
    double fit_window = 0.5;        // seconds of anchors used for prediction
    double overlap_tol_eta = 0.13;  // Hz, model argmax-shift flag threshold
    double overlap_tol_lambda = 0.13;  // Hz/s
    double seed_clip_mass = 0.01;   // max clipped window mass at the seed slice

    void validate() const {
        if (!(rho > 0.0) || !(delta > 0.0))
            throw std::invalid_argument("SeparationParams: rho and delta must be positive");
        if (threshold_is_fraction && !(threshold > 0.0 && threshold < 1.0))
            throw std::invalid_argument("SeparationParams: fractional threshold outside (0,1)");
        if (threshold < 0.0)
            throw std::invalid_argument("SeparationParams: threshold must be >= 0");
        if (expected_components < 1)
            throw std::invalid_argument("SeparationParams: need at least one component");
    }
};

struct GridPoint {
    int je = 0;
    int jl = 0;
};

struct ThresholdSet {
    std::vector<GridPoint> points;
    double resolved_threshold = 0.0;
    bool empty() const { return points.empty(); }
};

// G_t: grid points with |Q| strictly above the resolved threshold.
inline ThresholdSet threshold_set(const Slice& s, const SeparationParams& p) {
    ThresholdSet out;
    out.resolved_threshold = p.threshold_is_fraction ? p.threshold * s.max_mag : p.threshold;
    for (int je = 0; je < s.n_eta; ++je)
        for (int jl = 0; jl < s.n_lambda; ++jl)
            if (s.mag_at(je, jl) > out.resolved_threshold) out.points.push_back({je, jl});
    return out;
}

// Single-linkage clustering under d = |d_eta| + rho |d_lambda| with cutoff
// delta: connected components of the graph joining points with d < delta.
// The metric is separable, so points are grouped into per-row eta intervals
// first and linkage runs over intervals; this is exact and avoids scanning a
// per-point offset neighborhood.
inline std::vector<std::vector<GridPoint>> cluster(const std::vector<GridPoint>& points,
                                                   const AxisSpec& eta, const AxisSpec& lambda,
                                                   const SeparationParams& p) {
    std::vector<std::vector<GridPoint>> clusters;
    if (points.empty()) return clusters;

    std::vector<GridPoint> pts = points;
    std::sort(pts.begin(), pts.end(), [](const GridPoint& a, const GridPoint& b) {
        return a.jl < b.jl || (a.jl == b.jl && a.je < b.je);
    });

    // per-row eta intervals; within a row, points with gap * eta.step < delta link
    struct Iv {
        int jl, lo, hi;
    };
    std::vector<Iv> ivs;
    {
        Iv cur{pts[0].jl, pts[0].je, pts[0].je};
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].jl == cur.jl &&
                static_cast<double>(pts[i].je - cur.hi) * eta.step < p.delta) {
                cur.hi = pts[i].je;
            } else {
                ivs.push_back(cur);
                cur = {pts[i].jl, pts[i].je, pts[i].je};
            }
        }
        ivs.push_back(cur);
    }

    // union-find over intervals; ivs are sorted by jl
    std::vector<int> parent(ivs.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(b)] = a;
    };
    for (std::size_t i = 0; i < ivs.size(); ++i)
        for (std::size_t j = i + 1; j < ivs.size(); ++j) {
            const int drow = ivs[j].jl - ivs[i].jl;
            const double dl = p.rho * static_cast<double>(drow) * lambda.step;
            if (dl >= p.delta) break;  // later rows only farther
            const int egap = std::max({0, ivs[j].lo - ivs[i].hi, ivs[i].lo - ivs[j].hi});
            if (static_cast<double>(egap) * eta.step + dl < p.delta)
                unite(static_cast<int>(i), static_cast<int>(j));
        }

    // materialize clusters in first-seen order
    std::vector<int> cluster_of(ivs.size(), -1);
    for (std::size_t i = 0; i < ivs.size(); ++i) {
        const int root = find(static_cast<int>(i));
        if (cluster_of[static_cast<std::size_t>(root)] < 0) {
            cluster_of[static_cast<std::size_t>(root)] = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        cluster_of[i] = cluster_of[static_cast<std::size_t>(root)];
    }
    for (std::size_t i = 0; i < ivs.size(); ++i) {
        auto& bucket = clusters[static_cast<std::size_t>(cluster_of[i])];
        for (int je = ivs[i].lo; je <= ivs[i].hi; ++je) bucket.push_back({je, ivs[i].jl});
    }
    return clusters;
}

struct ClusterMax {
    int je = 0;
    int jl = 0;
    double eta = 0.0;
    double lambda = 0.0;
    cplx q;
};

// Per-cluster argmax of |Q|; ties broken by smallest eta index then smallest
// lambda index.
inline std::vector<ClusterMax> argmax_per_cluster(const Slice& s, const AxisSpec& eta,
                                                  const AxisSpec& lambda,
                                                  const std::vector<std::vector<GridPoint>>& cl) {
    std::vector<ClusterMax> out;
    out.reserve(cl.size());
    for (const auto& c : cl) {
        if (c.empty()) continue;
        GridPoint best = c.front();
        double bm = s.mag_at(best.je, best.jl);
        for (const auto& q : c) {
            const double m = s.mag_at(q.je, q.jl);
            if (m > bm || (m == bm && (q.je < best.je || (q.je == best.je && q.jl < best.jl)))) {
                best = q;
                bm = m;
            }
        }
        out.push_back({best.je, best.jl, eta.at(best.je), lambda.at(best.jl),
                       s.at(best.je, best.jl)});
    }
    return out;
}

enum RidgeFlag : std::uint8_t {
    ridge_clean = 0,
    ridge_gap = 1,      // no thresholded point in the search box; filled
    ridge_overlap = 2,  // interference could displace the argmax; filled
};

struct RidgeEntry {
    double t = 0.0;
    double eta = 0.0;
    double lambda = 0.0;
    cplx q;
    std::uint8_t flag = ridge_gap;
    bool boundary = false;
};

struct RidgeSet {
    // component-major: traces[k][pos] over the slice sequence
    std::vector<std::vector<RidgeEntry>> traces;
    std::vector<double> t_axis;
    bool seeded = false;
    int seed_pos = -1;
};

struct RecoveredComponent {
    int component_index = 0;
    std::vector<double> t;
    std::vector<cplx> samples;
    std::vector<double> amplitude_estimate;
    std::vector<std::uint8_t> flags;
};

inline std::vector<RecoveredComponent> to_components(const RidgeSet& r) {
    std::vector<RecoveredComponent> out;
    for (std::size_t k = 0; k < r.traces.size(); ++k) {
        RecoveredComponent c;
        c.component_index = static_cast<int>(k);
        for (const auto& e : r.traces[k]) {
            c.t.push_back(e.t);
            c.samples.push_back(e.q);
            c.amplitude_estimate.push_back(std::abs(e.q));
            c.flags.push_back(e.flag);
        }
        out.push_back(std::move(c));
    }
    return out;
}

// Worst-case (over relative phase) displacement, in grid cells, of the in-box
// argmax of a two-atom model response when the atom at `other` interferes
// with the one at `self`. Evaluated on the closed-form Gaussian PFT.
inline std::pair<int, int> model_argmax_shift(double sigma, double self_eta, double self_lambda,
                                              double other_eta, double other_lambda,
                                              double amp_self, double amp_other,
                                              const AxisSpec& eta, const AxisSpec& lambda,
                                              int jr, int ir) {
    const double de = std::abs(self_eta - other_eta);
    const double dl = std::abs(self_lambda - other_lambda);
    // far atoms cannot move the argmax
    const double de_in = std::max(0.0, de - (jr + 1) * eta.step);
    const double dl_in = std::max(0.0, dl - (ir + 1) * lambda.step);
    if (amp_other * pft_envelope(sigma * de_in, sigma * sigma * dl_in) < 1e-4 * amp_self)
        return {0, 0};
    const int ne = 2 * jr + 1, nl = 2 * ir + 1;
    std::vector<cplx> a(static_cast<std::size_t>(ne) * nl), b(a.size());
    for (int i = 0; i < ne; ++i) {
        const double e = self_eta + (i - jr) * eta.step;
        for (int j = 0; j < nl; ++j) {
            const double l = self_lambda + (j - ir) * lambda.step;
            a[static_cast<std::size_t>(i) * nl + j] =
                amp_self * pft_closed(sigma * (e - self_eta), sigma * sigma * (l - self_lambda));
            b[static_cast<std::size_t>(i) * nl + j] =
                amp_other * pft_closed(sigma * (e - other_eta), sigma * sigma * (l - other_lambda));
        }
    }
    auto argmax = [&](auto&& val) {
        int bi = 0, bj = 0;
        double bm = -1.0;
        for (int i = 0; i < ne; ++i)
            for (int j = 0; j < nl; ++j) {
                const double m = val(static_cast<std::size_t>(i) * nl + j);
                if (m > bm) {
                    bm = m;
                    bi = i;
                    bj = j;
                }
            }
        return std::pair<int, int>(bi, bj);
    };
    const auto [i0, j0] = argmax([&](std::size_t i) { return std::abs(a[i]); });
    int we = 0, wl = 0;
    const cplx phases[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (const auto& ph : phases) {
        const auto [i1, j1] = argmax([&](std::size_t i) { return std::abs(a[i] + ph * b[i]); });
        we = std::max(we, std::abs(i1 - i0));
        wl = std::max(wl, std::abs(j1 - j0));
    }
    return {we, wl};
}

// Ridge tracker realizing Algorithm 1's per-component argmax with an
// observable surrogate for the ground-truth boxes: each component's ridge
// point is the argmax of |Q| over the thresholded points inside a small box
// centered on a motion-model prediction (least-squares line over a trailing
// anchor window). Slices where a pairwise interference model could displace
// that argmax beyond tolerance are flagged and later filled by interpolation
// between clean anchors, as are slices with an empty box. Tracking runs
// forward and backward from a seed slice with K well-separated cluster
// maxima.
class RidgeTracker {
  public:
    RidgeTracker(SeparationParams p, AxisSpec eta, AxisSpec lambda, double sigma_const)
        : p_(p), eta_(eta), lambda_(lambda), sigma_(sigma_const) {
        p_.validate();
        jr_ = std::max(1, static_cast<int>(std::llround(p_.box_eta / eta_.step)));
        ir_ = std::max(1, static_cast<int>(std::llround(p_.box_lambda / lambda_.step)));
    }

    bool seeded() const { return seeded_; }
    int seed_pos() const { return seed_pos_; }

    void set_slice_count(std::size_t n) {
        const int k = p_.expected_components;
        entries_.assign(static_cast<std::size_t>(k), std::vector<RidgeEntry>(n));
    }

    // Attempt seeding: K cluster maxima, pairwise >= 2 delta apart in d,
    // greedily by |Q|; component order by (lambda, eta) as the frame-0 rule.
    bool try_seed(const Slice& s, const std::vector<ClusterMax>& maxima) {
        if (seeded_) return true;
        const int k = p_.expected_components;
        std::vector<ClusterMax> sorted = maxima;
        std::sort(sorted.begin(), sorted.end(), [](const ClusterMax& a, const ClusterMax& b) {
            const double ma = std::abs(a.q), mb = std::abs(b.q);
            if (ma != mb) return ma > mb;
            return a.je != b.je ? a.je < b.je : a.jl < b.jl;
        });
        std::vector<ClusterMax> seeds;
        for (const auto& m : sorted) {
            bool ok = true;
            for (const auto& sdd : seeds)
                if (std::abs(m.eta - sdd.eta) + p_.rho * std::abs(m.lambda - sdd.lambda) <
                    2.0 * p_.delta) {
                    ok = false;
                    break;
                }
            if (ok) seeds.push_back(m);
            if (static_cast<int>(seeds.size()) == k) break;
        }
        if (static_cast<int>(seeds.size()) != k) return false;
        std::sort(seeds.begin(), seeds.end(), [](const ClusterMax& a, const ClusterMax& b) {
            return a.lambda < b.lambda || (a.lambda == b.lambda && a.eta < b.eta);
        });
        for (int c = 0; c < k; ++c) {
            RidgeEntry e;
            e.t = s.t;
            e.eta = seeds[static_cast<std::size_t>(c)].eta;
            e.lambda = seeds[static_cast<std::size_t>(c)].lambda;
            e.q = seeds[static_cast<std::size_t>(c)].q;
            e.flag = ridge_clean;
            e.boundary = s.boundary;
            entries_[static_cast<std::size_t>(c)][static_cast<std::size_t>(s.pos)] = e;
            seed_anchors_.push_back({s.t, e.eta, e.lambda, std::abs(e.q)});
        }
        seeded_ = true;
        seed_pos_ = s.pos;
        return true;
    }

    void begin_pass() {
        pass_anchors_.assign(static_cast<std::size_t>(p_.expected_components), {});
        for (int c = 0; c < p_.expected_components; ++c)
            pass_anchors_[static_cast<std::size_t>(c)].push_back(
                seed_anchors_[static_cast<std::size_t>(c)]);
    }

    void step(const Slice& s, const ThresholdSet& th) {
        const int k = p_.expected_components;
        // predictions
        std::vector<std::pair<double, double>> preds(static_cast<std::size_t>(k));
        std::vector<double> amps(static_cast<std::size_t>(k), 1.0);
        for (int c = 0; c < k; ++c) {
            preds[static_cast<std::size_t>(c)] = predict(pass_anchors_[static_cast<std::size_t>(c)], s.t);
            amps[static_cast<std::size_t>(c)] = pass_anchors_[static_cast<std::size_t>(c)].back().amp;
        }
        // interference flags
        std::vector<bool> overlapped(static_cast<std::size_t>(k), false);
        for (int c = 0; c < k; ++c)
            for (int o = 0; o < k && !overlapped[static_cast<std::size_t>(c)]; ++o) {
                if (o == c) continue;
                const auto [we, wl] = model_argmax_shift(
                    sigma_, preds[static_cast<std::size_t>(c)].first,
                    preds[static_cast<std::size_t>(c)].second,
                    preds[static_cast<std::size_t>(o)].first,
                    preds[static_cast<std::size_t>(o)].second,
                    amps[static_cast<std::size_t>(c)], amps[static_cast<std::size_t>(o)], eta_,
                    lambda_, jr_, ir_);
                if (we * eta_.step > p_.overlap_tol_eta ||
                    wl * lambda_.step > p_.overlap_tol_lambda)
                    overlapped[static_cast<std::size_t>(c)] = true;
            }
        // occupancy of the thresholded set for box lookups
        mask_.assign(static_cast<std::size_t>(s.n_eta) * s.n_lambda, 0);
        for (const auto& q : th.points)
            mask_[static_cast<std::size_t>(q.je) * s.n_lambda + q.jl] = 1;

        std::vector<std::pair<int, int>> chosen(static_cast<std::size_t>(k), {-1, -1});
        for (int c = 0; c < k; ++c) {
            if (overlapped[static_cast<std::size_t>(c)]) continue;
            const auto& [pe, pl] = preds[static_cast<std::size_t>(c)];
            const int j0 = static_cast<int>(std::llround((pe - eta_.start) / eta_.step));
            const int i0 = static_cast<int>(std::llround((pl - lambda_.start) / lambda_.step));
            const int jlo = std::max(0, j0 - jr_), jhi = std::min(s.n_eta - 1, j0 + jr_);
            const int ilo = std::max(0, i0 - ir_), ihi = std::min(s.n_lambda - 1, i0 + ir_);
            int bj = -1, bi = -1;
            double bm = -1.0;
            for (int je = jlo; je <= jhi; ++je)
                for (int jl = ilo; jl <= ihi; ++jl) {
                    if (!mask_[static_cast<std::size_t>(je) * s.n_lambda + jl]) continue;
                    const double m = s.mag_at(je, jl);
                    if (m > bm) {
                        bm = m;
                        bj = je;
                        bi = jl;
                    }
                }
            chosen[static_cast<std::size_t>(c)] = {bj, bi};
        }
        // two boxes claiming one cell: the closer prediction keeps it
        for (int c = 0; c < k; ++c)
            for (int o = c + 1; o < k; ++o) {
                auto& a = chosen[static_cast<std::size_t>(c)];
                auto& b = chosen[static_cast<std::size_t>(o)];
                if (a.first < 0 || a != b) continue;
                const double pt_eta = eta_.at(a.first), pt_lam = lambda_.at(a.second);
                const double da = std::abs(pt_eta - preds[static_cast<std::size_t>(c)].first) +
                                  p_.rho * std::abs(pt_lam - preds[static_cast<std::size_t>(c)].second);
                const double db = std::abs(pt_eta - preds[static_cast<std::size_t>(o)].first) +
                                  p_.rho * std::abs(pt_lam - preds[static_cast<std::size_t>(o)].second);
                (da <= db ? b : a) = {-1, -1};
            }

        for (int c = 0; c < k; ++c) {
            RidgeEntry& e = entries_[static_cast<std::size_t>(c)][static_cast<std::size_t>(s.pos)];
            e.t = s.t;
            e.boundary = s.boundary;
            if (overlapped[static_cast<std::size_t>(c)]) {
                e.flag = ridge_overlap;
                continue;
            }
            const auto [bj, bi] = chosen[static_cast<std::size_t>(c)];
            if (bj < 0) {
                e.flag = ridge_gap;
                continue;
            }
            e.flag = ridge_clean;
            e.eta = eta_.at(bj);
            e.lambda = lambda_.at(bi);
            e.q = s.at(bj, bi);
            pass_anchors_[static_cast<std::size_t>(c)].push_back(
                {s.t, e.eta, e.lambda, std::abs(e.q)});
        }
    }

    // Fill flagged entries by interpolating the clean anchors of both passes
    // and reading the transform at the filled grid point.
    RidgeSet finalize(const std::vector<double>& t_axis,
                      const std::function<cplx(double, double, double)>& q_at) {
        RidgeSet out;
        out.t_axis = t_axis;
        out.seeded = seeded_;
        out.seed_pos = seed_pos_;
        out.traces = entries_;
        if (!seeded_) return out;
        for (std::size_t c = 0; c < out.traces.size(); ++c) {
            std::vector<Anchor> anchors;
            for (const auto& e : out.traces[c])
                if (e.flag == ridge_clean)
                    anchors.push_back({e.t, e.eta, e.lambda, std::abs(e.q)});
            std::sort(anchors.begin(), anchors.end(),
                      [](const Anchor& a, const Anchor& b) { return a.t < b.t; });
            if (anchors.empty()) continue;
            for (auto& e : out.traces[c]) {
                if (e.flag == ridge_clean) continue;
                const double ei = interp(anchors, e.t, /*eta=*/true);
                const double li = interp(anchors, e.t, /*eta=*/false);
                e.eta = eta_.at(eta_.nearest(ei));
                e.lambda = lambda_.at(lambda_.nearest(li));
                e.q = q_at(e.t, e.eta, e.lambda);
            }
        }
        return out;
    }

  private:
    struct Anchor {
        double t, eta, lambda, amp;
    };

    std::pair<double, double> predict(const std::vector<Anchor>& a, double t) const {
        if (a.size() == 1) return {a.back().eta, a.back().lambda};
        std::size_t first = a.size();
        while (first > 0 && std::abs(a[first - 1].t - a.back().t) <= p_.fit_window) --first;
        if (a.size() - first < 4) first = a.size() >= 4 ? a.size() - 4 : 0;
        const std::size_t n = a.size() - first;
        if (n < 3) return {a.back().eta, a.back().lambda};
        double st = 0, se = 0, sl = 0, stt = 0, ste = 0, stl = 0;
        for (std::size_t i = first; i < a.size(); ++i) {
            st += a[i].t;
            se += a[i].eta;
            sl += a[i].lambda;
            stt += a[i].t * a[i].t;
            ste += a[i].t * a[i].eta;
            stl += a[i].t * a[i].lambda;
        }
        const double dn = static_cast<double>(n);
        const double den = dn * stt - st * st;
        if (std::abs(den) < 1e-30) return {a.back().eta, a.back().lambda};
        const double be = (dn * ste - st * se) / den;
        const double bl = (dn * stl - st * sl) / den;
        const double ae = (se - be * st) / dn;
        const double al = (sl - bl * st) / dn;
        return {ae + be * t, al + bl * t};
    }

    static double interp(const std::vector<Anchor>& a, double t, bool eta) {
        auto val = [&](const Anchor& x) { return eta ? x.eta : x.lambda; };
        if (t <= a.front().t) return val(a.front());
        if (t >= a.back().t) return val(a.back());
        std::size_t hi = 1;
        while (hi < a.size() && a[hi].t < t) ++hi;
        const Anchor& p = a[hi - 1];
        const Anchor& q = a[hi];
        const double w = (t - p.t) / (q.t - p.t);
        return val(p) + w * (val(q) - val(p));
    }

    SeparationParams p_;
    AxisSpec eta_, lambda_;
    double sigma_;
    int jr_ = 1, ir_ = 1;
    bool seeded_ = false;
    int seed_pos_ = -1;
    std::vector<Anchor> seed_anchors_;
    std::vector<std::vector<Anchor>> pass_anchors_;
    std::vector<std::vector<RidgeEntry>> entries_;
    std::vector<std::uint8_t> mask_;
};

// Component recovery from a materialized cube: x_k(t) ~ Q(t, eta_k, lambda_k).
inline std::vector<RecoveredComponent> retrieve(const TransformCube& cube, const RidgeSet& r) {
    std::vector<RecoveredComponent> out;
    for (std::size_t k = 0; k < r.traces.size(); ++k) {
        RecoveredComponent c;
        c.component_index = static_cast<int>(k);
        for (std::size_t pos = 0; pos < r.traces[k].size(); ++pos) {
            const auto& e = r.traces[k][pos];
            const int je = cube.grid.eta.nearest(e.eta);
            const int jl = cube.grid.lambda.nearest(e.lambda);
            const cplx q = cube.at(static_cast<int>(pos), je, jl);
            c.t.push_back(e.t);
            c.samples.push_back(q);
            c.amplitude_estimate.push_back(std::abs(q));
            c.flags.push_back(e.flag);
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace ct3s
