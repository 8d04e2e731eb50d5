#include "md2i/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace md2i {

namespace {

struct Segment {
    double x0, y0, x1, y1;
};

double dist_to_segment(double px, double py, const Segment& s) {
    double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
    double wx = px - s.x0, wy = py - s.y0;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = px - (s.x0 + t * vx), dy = py - (s.y0 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// Segment-display encodings: A top, B top-right, C bottom-right, D bottom,
// E bottom-left, F top-left, G middle.
constexpr std::array<std::array<bool, 7>, 10> kSegments = {{
    {true, true, true, true, true, true, false},     // 0
    {false, true, true, false, false, false, false}, // 1
    {true, true, false, true, true, false, true},    // 2
    {true, true, true, true, false, false, true},    // 3
    {false, true, true, false, false, true, true},   // 4
    {true, false, true, true, false, true, true},    // 5
    {true, false, true, true, true, true, true},     // 6
    {true, true, true, false, false, false, false},  // 7
    {true, true, true, true, true, true, true},      // 8
    {true, true, true, true, false, true, true},     // 9
}};

}  // namespace

DomainDataset make_glyph_digits(int per_class, uint64_t seed) {
    constexpr int kSide = 28;
    constexpr double kX0 = 10.0, kX1 = 18.0, kY0 = 5.0, kYm = 13.5, kY1 = 22.0;
    Rng rng(seed);
    int n = per_class * 10;
    DomainDataset ds;
    ds.x = Matrix(n, kSide * kSide);
    ds.m = Matrix(n, kSide * kSide, 1.0);
    ds.col_types.assign(kSide * kSide, ColType::Continuous);
    std::vector<int> labels(n);

    for (int row = 0; row < n; ++row) {
        int digit = row % 10;
        labels[row] = digit;
        double dx = rng.uniform(-2.0, 2.0);
        double dy = rng.uniform(-2.0, 2.0);
        double half_width = 0.5 * (2.0 + rng.uniform(-0.3, 0.5));
        double intensity = 0.8 + rng.uniform(0.0, 0.2);

        std::array<Segment, 7> segs = {{
            {kX0, kY0, kX1, kY0},  // A
            {kX1, kY0, kX1, kYm},  // B
            {kX1, kYm, kX1, kY1},  // C
            {kX0, kY1, kX1, kY1},  // D
            {kX0, kYm, kX0, kY1},  // E
            {kX0, kY0, kX0, kYm},  // F
            {kX0, kYm, kX1, kYm},  // G
        }};
        std::vector<Segment> active;
        for (int s = 0; s < 7; ++s) {
            if (!kSegments[digit][s]) continue;
            Segment seg = segs[s];
            seg.x0 += dx + rng.uniform(-0.6, 0.6);
            seg.y0 += dy + rng.uniform(-0.6, 0.6);
            seg.x1 += dx + rng.uniform(-0.6, 0.6);
            seg.y1 += dy + rng.uniform(-0.6, 0.6);
            active.push_back(seg);
        }
        double* px = ds.x.row_ptr(row);
        for (int r = 0; r < kSide; ++r) {
            for (int c = 0; c < kSide; ++c) {
                double best = 0.0;
                for (const auto& seg : active) {
                    double dist = dist_to_segment(c, r, seg);
                    best = std::max(best, std::clamp(1.2 * (half_width + 0.5 - dist), 0.0, 1.0));
                }
                double v = intensity * best + rng.uniform(0.0, 0.06);
                px[r * kSide + c] = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    ds.y = one_hot(labels, 10);
    ds.y_is_onehot = true;
    return ds;
}

namespace {

// Affine maps from latent factors into [0.05, 0.95] per column.
struct LatentMixer {
    std::vector<std::vector<double>> weights;  // d x k
    std::vector<double> offset;                // d
    std::vector<double> span;                  // d

    LatentMixer(int d, int k, Rng& rng) {
        weights.assign(d, std::vector<double>(k));
        offset.assign(d, 0.0);
        span.assign(d, 1.0);
        for (int j = 0; j < d; ++j) {
            double lo = 0.0, hi = 0.0;
            for (int f = 0; f < k; ++f) {
                double w = rng.uniform(-1.0, 1.0);
                weights[j][f] = w;
                if (w < 0)
                    lo += w;
                else
                    hi += w;
            }
            offset[j] = lo;
            span[j] = std::max(hi - lo, 1e-9);
        }
    }

    double column(int j, const std::vector<double>& z) const {
        double raw = 0.0;
        for (size_t f = 0; f < z.size(); ++f) raw += weights[j][f] * z[f];
        return 0.05 + 0.9 * (raw - offset[j]) / span[j];
    }
};

}  // namespace

DomainDataset make_linear_tabular(int n, int d, uint64_t seed) {
    constexpr int kFactors = 3;
    Rng rng(seed);
    LatentMixer mixer(d, kFactors, rng);
    DomainDataset ds;
    ds.x = Matrix(n, d);
    ds.m = Matrix(n, d, 1.0);
    ds.col_types.assign(d, ColType::Continuous);
    std::vector<double> z(kFactors);
    for (int i = 0; i < n; ++i) {
        for (double& v : z) v = rng.uniform();
        for (int j = 0; j < d; ++j) {
            double v = mixer.column(j, z) + 0.02 * rng.gaussian();
            ds.x(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return ds;
}

std::vector<DomainDataset> make_task_regression(int tasks, int n_per_task, int d, uint64_t seed) {
    constexpr int kFactors = 6;
    Rng rng(seed);
    LatentMixer mixer(d, kFactors, rng);
    std::vector<double> w_common(d);
    for (double& v : w_common) v = rng.uniform();
    double w_sum = std::accumulate(w_common.begin(), w_common.end(), 0.0);
    for (double& v : w_common) v /= w_sum;

    std::vector<DomainDataset> out;
    out.reserve(tasks);
    for (int t = 0; t < tasks; ++t) {
        std::vector<double> w_task(d);
        double sum = 0.0;
        for (int j = 0; j < d; ++j) {
            w_task[j] = std::max(0.0, w_common[j] + rng.uniform(-0.35, 0.35) / d);
            sum += w_task[j];
        }
        for (double& v : w_task) v /= std::max(sum, 1e-9);
        std::vector<double> shift(kFactors);
        for (double& v : shift) v = rng.uniform(-0.1, 0.1);

        DomainDataset ds;
        ds.domain_id = t;
        ds.x = Matrix(n_per_task, d);
        ds.m = Matrix(n_per_task, d, 1.0);
        ds.col_types.assign(d, ColType::Continuous);
        ds.y = Matrix(n_per_task, 1);
        ds.y_is_onehot = false;
        std::vector<double> z(kFactors);
        for (int i = 0; i < n_per_task; ++i) {
            for (int f = 0; f < kFactors; ++f) z[f] = std::clamp(rng.uniform() + shift[f], 0.0, 1.0);
            double y = 0.0;
            for (int j = 0; j < d; ++j) {
                double clean = mixer.column(j, z);
                ds.x(i, j) = std::clamp(clean + 0.02 * rng.gaussian(), 0.0, 1.0);
                y += w_task[j] * clean;
            }
            ds.y(i, 0) = y + 0.03 * rng.gaussian();
        }
        out.push_back(std::move(ds));
    }
    return out;
}

std::vector<DomainDataset> make_shifted_blobs(int n_per_domain, int d, double shift, uint64_t seed) {
    Rng rng(seed);
    // Two class centers shared across domains plus two within-class factors
    // orthogonal to the class axis, so codes must stay informative for both
    // classes. The domain shift moves everything.
    std::vector<double> c0(d), c1(d), axis(d);
    for (int j = 0; j < d; ++j) {
        c0[j] = 0.42 + 0.05 * rng.uniform(-1.0, 1.0);
        c1[j] = 0.58 + 0.05 * rng.uniform(-1.0, 1.0);
        axis[j] = c1[j] - c0[j];
    }
    auto orthogonalize = [&](std::vector<double> v, const std::vector<double>& against) {
        double dot = 0.0, norm2 = 0.0;
        for (int j = 0; j < d; ++j) {
            dot += v[j] * against[j];
            norm2 += against[j] * against[j];
        }
        for (int j = 0; j < d; ++j) v[j] -= dot / std::max(norm2, 1e-12) * against[j];
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::fabs(x));
        for (double& x : v) x /= std::max(scale, 1e-12);
        return v;
    };
    std::vector<double> dir1(d), dir2(d);
    for (int j = 0; j < d; ++j) {
        dir1[j] = rng.uniform(-1.0, 1.0);
        dir2[j] = rng.uniform(-1.0, 1.0);
    }
    dir1 = orthogonalize(std::move(dir1), axis);
    dir2 = orthogonalize(orthogonalize(std::move(dir2), axis), dir1);

    std::vector<DomainDataset> out;
    for (int dom = 0; dom < 2; ++dom) {
        double dshift = dom == 0 ? -shift / 2.0 : shift / 2.0;
        DomainDataset ds;
        ds.domain_id = dom;
        ds.x = Matrix(n_per_domain, d);
        ds.m = Matrix(n_per_domain, d, 1.0);
        ds.col_types.assign(d, ColType::Continuous);
        std::vector<int> labels(n_per_domain);
        for (int i = 0; i < n_per_domain; ++i) {
            labels[i] = rng.uniform() < 0.5 ? 0 : 1;
            const auto& center = labels[i] == 0 ? c0 : c1;
            double t1 = rng.uniform(-1.0, 1.0), t2 = rng.uniform(-1.0, 1.0);
            for (int j = 0; j < d; ++j)
                ds.x(i, j) = std::clamp(
                    center[j] + dshift + 0.22 * t1 * dir1[j] + 0.22 * t2 * dir2[j] +
                        0.03 * rng.gaussian(),
                    0.02, 0.98);
        }
        ds.y = one_hot(labels, 2);
        ds.y_is_onehot = true;
        out.push_back(std::move(ds));
    }
    return out;
}

}  // namespace md2i
