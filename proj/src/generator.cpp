#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "aacp/data.hpp"
#include "aacp/errors.hpp"
#include "aacp/rng.hpp"

// Procedural painting synthesis. The canvas is divided into a 4x4 layout
// grid; elements are confined to their own cell (rasterization scans cell
// pixels only), so every added element paints pixels no other element can
// touch. Cells are visited in mirror pairs: with probability `symmetry` the
// right-hand member of a pair is an exact mirror copy of its partner.

namespace aacp::data {

namespace {

constexpr int kGrid = 4;                 // 4x4 layout cells
constexpr int kMaxElements = kGrid * kGrid;
constexpr double kScatterBudget = 0.12;  // max anchor displacement, in cell units
constexpr double kWobble = 0.30;         // outline modulation at stroke_jitter = 1

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) {
        r = c; g = x;
    } else if (hp < 2) {
        r = x; g = c;
    } else if (hp < 3) {
        g = c; b = x;
    } else if (hp < 4) {
        g = x; b = c;
    } else if (hp < 5) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = v - c;
    auto q = [&](double t) { return static_cast<std::uint8_t>(std::lround(std::clamp((t + m) * 255.0, 0.0, 255.0))); };
    return {q(r), q(g), q(b)};
}

enum class ShapeKind { Disc = 0, Rect = 1, Triangle = 2, Squiggle = 3 };

struct ElementParams {
    int cell = 0;              // index into the 4x4 grid
    bool mirror_of_prev = false;
    ShapeKind kind = ShapeKind::Disc;
    double off_x = 0, off_y = 0;  // anchor offset in [-1,1], scaled by scatter
    double radius_u = 0.5;        // size sample in [0,1]
    int color = 0;
    double rot = 0;
    double wob_phase_a = 0, wob_phase_b = 0;
    int wob_freq_a = 3, wob_freq_b = 6;
    std::array<double, 3> tri_jit{};
    std::array<double, 7> path_jit{};
    double squiggle_phase = 0;
};

struct RenderElement {
    ElementParams p;
    double anchor_x = 0, anchor_y = 0;
    double radius = 1.0;
    bool mirrored = false;  // evaluate geometry x-flipped
};

double wobble(const ElementParams& p, double jitter, double theta) {
    return 1.0 + jitter * kWobble *
                     (0.6 * std::sin(p.wob_freq_a * theta + p.wob_phase_a) +
                      0.4 * std::sin(p.wob_freq_b * theta + p.wob_phase_b));
}

bool inside_shape(const RenderElement& e, double jitter, double px, double py) {
    double dx = px - e.anchor_x;
    const double dy = py - e.anchor_y;
    if (e.mirrored) dx = -dx;
    const auto& p = e.p;
    const double r = e.radius;
    switch (p.kind) {
        case ShapeKind::Disc: {
            const double theta = std::atan2(dy, dx);
            const double dist = std::sqrt(dx * dx + dy * dy);
            return dist <= r * wobble(p, jitter, theta);
        }
        case ShapeKind::Rect: {
            const double u = dx * std::cos(-p.rot) - dy * std::sin(-p.rot);
            const double v = dx * std::sin(-p.rot) + dy * std::cos(-p.rot);
            const double m = std::max(std::fabs(u) / (r * 0.95), std::fabs(v) / (r * 0.62));
            return m <= wobble(p, jitter, std::atan2(v, u));
        }
        case ShapeKind::Triangle: {
            std::array<double, 3> vx{}, vy{};
            for (int i = 0; i < 3; ++i) {
                const double vr = r * (1.0 + kWobble * jitter * p.tri_jit[static_cast<std::size_t>(i)]);
                const double a = p.rot + 2.0 * M_PI * i / 3.0;
                vx[static_cast<std::size_t>(i)] = vr * std::cos(a);
                vy[static_cast<std::size_t>(i)] = vr * std::sin(a);
            }
            double s0 = 0, s1 = 0, s2 = 0;
            auto cross = [&](int i, int j) {
                return (vx[static_cast<std::size_t>(j)] - vx[static_cast<std::size_t>(i)]) * (dy - vy[static_cast<std::size_t>(i)]) -
                       (vy[static_cast<std::size_t>(j)] - vy[static_cast<std::size_t>(i)]) * (dx - vx[static_cast<std::size_t>(i)]);
            };
            s0 = cross(0, 1);
            s1 = cross(1, 2);
            s2 = cross(2, 0);
            const bool neg = s0 < 0 || s1 < 0 || s2 < 0;
            const bool pos = s0 > 0 || s1 > 0 || s2 > 0;
            return !(neg && pos);
        }
        case ShapeKind::Squiggle: {
            const double th = std::max(1.2, r * 0.28);
            const double dirx = std::cos(p.rot), diry = std::sin(p.rot);
            double prevx = 0, prevy = 0;
            for (int i = 0; i < 7; ++i) {
                const double t = i / 6.0;
                double perp = 0.35 * r * std::sin(2.0 * M_PI * 1.5 * t + p.squiggle_phase) +
                              kWobble * jitter * r * p.path_jit[static_cast<std::size_t>(i)];
                perp = std::clamp(perp, -0.55 * r, 0.55 * r);
                const double qx = dirx * (2.0 * t - 1.0) * r - diry * perp;
                const double qy = diry * (2.0 * t - 1.0) * r + dirx * perp;
                if (i > 0) {
                    // distance from (dx,dy) to segment (prev -> q)
                    const double sx = qx - prevx, sy = qy - prevy;
                    const double len2 = sx * sx + sy * sy;
                    double tt = len2 > 0 ? ((dx - prevx) * sx + (dy - prevy) * sy) / len2 : 0.0;
                    tt = std::clamp(tt, 0.0, 1.0);
                    const double cx = prevx + tt * sx, cy = prevy + tt * sy;
                    const double dd = (dx - cx) * (dx - cx) + (dy - cy) * (dy - cy);
                    if (dd <= th * th) return true;
                }
                prevx = qx;
                prevy = qy;
            }
            return false;
        }
    }
    return false;
}

ElementParams draw_params(std::uint64_t seed, int k, int shape_kinds) {
    Rng rng(Rng::mix(seed, 100 + static_cast<std::uint64_t>(k)));
    ElementParams p;
    p.kind = static_cast<ShapeKind>(k % shape_kinds);
    p.off_x = rng.uniform(-1.0, 1.0);
    p.off_y = rng.uniform(-1.0, 1.0);
    p.radius_u = rng.uniform();
    p.color = static_cast<int>(rng.uniform_int(5));
    p.rot = rng.uniform(0.0, 2.0 * M_PI);
    p.wob_phase_a = rng.uniform(0.0, 2.0 * M_PI);
    p.wob_phase_b = rng.uniform(0.0, 2.0 * M_PI);
    p.wob_freq_a = 2 + static_cast<int>(rng.uniform_int(3));
    p.wob_freq_b = 5 + static_cast<int>(rng.uniform_int(3));
    for (auto& t : p.tri_jit) t = rng.uniform(-1.0, 1.0);
    for (auto& t : p.path_jit) t = rng.uniform(-1.0, 1.0);
    p.squiggle_phase = rng.uniform(0.0, 2.0 * M_PI);
    return p;
}

}  // namespace

void GeneratorSpec::validate() const {
    if (canvas < 32 || canvas > 512 || canvas % 16 != 0)
        throw ValidationError("generator: canvas must be in [32,512] and divisible by 16, got " + std::to_string(canvas));
    if (element_count < 0 || element_count > kMaxElements)
        throw ValidationError("generator: element_count must be in [0," + std::to_string(kMaxElements) + "]");
    if (!(stroke_jitter >= 0.0 && stroke_jitter <= 1.0)) throw ValidationError("generator: stroke_jitter outside [0,1]");
    if (!(scatter >= 0.0 && scatter <= 1.0)) throw ValidationError("generator: scatter outside [0,1]");
    if (shape_kinds < 1 || shape_kinds > 4) throw ValidationError("generator: shape_kinds must be in [1,4]");
    if (!(symmetry >= 0.0 && symmetry <= 1.0)) throw ValidationError("generator: symmetry outside [0,1]");
    if (!(background_lum >= 0.0 && background_lum <= 1.0)) throw ValidationError("generator: background_lum outside [0,1]");
    if (!(saturation >= 0.0 && saturation <= 1.0)) throw ValidationError("generator: saturation outside [0,1]");
}

GeneratorSpec sample_spec(int canvas, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 11));
    GeneratorSpec s;
    s.canvas = canvas;
    s.element_count = static_cast<int>(rng.uniform_int(kMaxElements + 1));
    s.stroke_jitter = rng.uniform();
    s.scatter = rng.uniform();
    s.shape_kinds = 1 + static_cast<int>(rng.uniform_int(4));
    s.symmetry = rng.uniform();
    s.background_lum = rng.uniform(0.25, 1.0);
    s.saturation = rng.uniform();
    return s;
}

GeneratedPainting generate_synthetic_painting(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int cv = spec.canvas;
    const double cell = static_cast<double>(cv) / kGrid;

    // palette
    Rng palette_rng(Rng::mix(seed, 2));
    std::array<Rgb, 5> palette{};
    for (auto& c : palette) {
        const double hue = palette_rng.uniform();
        const double sat = spec.saturation * palette_rng.uniform(0.7, 1.0);
        const double val = palette_rng.uniform(0.40, 0.95);
        c = hsv_to_rgb(hue, sat, val);
    }
    const Rgb bg = hsv_to_rgb(palette_rng.uniform(), 0.25 * spec.saturation, spec.background_lum);

    // mirror-paired cell order: left half cells shuffled, each followed by
    // its reflection about the vertical center line
    std::vector<int> left_cells;
    for (int cy = 0; cy < kGrid; ++cy)
        for (int cx = 0; cx < kGrid / 2; ++cx) left_cells.push_back(cy * kGrid + cx);
    Rng order_rng(Rng::mix(seed, 3));
    for (std::size_t i = left_cells.size(); i > 1; --i)
        std::swap(left_cells[i - 1], left_cells[order_rng.uniform_int(i)]);
    std::vector<int> cell_order;
    for (const int c : left_cells) {
        const int cx = c % kGrid, cy = c / kGrid;
        cell_order.push_back(c);
        cell_order.push_back(cy * kGrid + (kGrid - 1 - cx));
    }

    // element parameters are drawn per index, independent of element_count,
    // so corpora with different counts share their common prefix exactly
    std::vector<ElementParams> params;
    Rng mirror_rng(Rng::mix(seed, 5));
    for (int k = 0; k < kMaxElements; ++k) {
        ElementParams p = draw_params(seed, k, spec.shape_kinds);
        p.cell = cell_order[static_cast<std::size_t>(k)];
        p.mirror_of_prev = (k % 2 == 1) && mirror_rng.uniform() < spec.symmetry;
        params.push_back(p);
    }

    Image img(cv, cv);
    for (int y = 0; y < cv; ++y)
        for (int x = 0; x < cv; ++x) {
            img.at(y, x, 0) = bg.r;
            img.at(y, x, 1) = bg.g;
            img.at(y, x, 2) = bg.b;
        }
    std::vector<bool> covered(static_cast<std::size_t>(cv * cv), false);

    const double max_disp = spec.scatter * kScatterBudget * cell;
    for (int k = 0; k < spec.element_count; ++k) {
        RenderElement e;
        const bool mirrored = params[static_cast<std::size_t>(k)].mirror_of_prev && k > 0;
        e.p = mirrored ? params[static_cast<std::size_t>(k - 1)] : params[static_cast<std::size_t>(k)];
        e.mirrored = mirrored;
        const int cell_idx = params[static_cast<std::size_t>(k)].cell;
        const int cx = cell_idx % kGrid, cy = cell_idx / kGrid;
        const double center_x = (cx + 0.5) * cell, center_y = (cy + 0.5) * cell;
        if (mirrored) {
            // reflect the partner's anchor about the canvas midline
            const int pcell = params[static_cast<std::size_t>(k - 1)].cell;
            const double pax = ((pcell % kGrid) + 0.5) * cell + e.p.off_x * max_disp;
            e.anchor_x = cv - pax;
            e.anchor_y = ((pcell / kGrid) + 0.5) * cell + e.p.off_y * max_disp;
        } else {
            e.anchor_x = center_x + e.p.off_x * max_disp;
            e.anchor_y = center_y + e.p.off_y * max_disp;
        }
        const double budget = (cell / 2.0 - 1.0) - max_disp;
        const double sampled = cell * (0.18 + 0.10 * e.p.radius_u);
        e.radius = std::max(1.0, std::min(sampled, budget / (1.0 + kWobble)));

        const Rgb color = palette[static_cast<std::size_t>(e.p.color)];
        const int x0 = cx * static_cast<int>(cell), y0 = cy * static_cast<int>(cell);
        for (int y = y0; y < y0 + static_cast<int>(cell); ++y)
            for (int x = x0; x < x0 + static_cast<int>(cell); ++x)
                if (inside_shape(e, spec.stroke_jitter, x + 0.5, y + 0.5)) {
                    img.at(y, x, 0) = color.r;
                    img.at(y, x, 1) = color.g;
                    img.at(y, x, 2) = color.b;
                    covered[static_cast<std::size_t>(y * cv + x)] = true;
                }
    }

    // measured statistics
    double luma = 0.0, sat = 0.0;
    std::int64_t painted = 0;
    for (int y = 0; y < cv; ++y)
        for (int x = 0; x < cv; ++x) {
            const double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
            luma += (r + g + b) / 3.0;
            sat += (std::max({r, g, b}) - std::min({r, g, b})) / 255.0;
            if (covered[static_cast<std::size_t>(y * cv + x)]) ++painted;
        }
    const double pixels = static_cast<double>(cv) * cv;
    const double mean_luma = luma / pixels;
    const double mean_sat = sat / pixels;
    const double covered_frac = static_cast<double>(painted) / pixels;

    AttributeVector labels;
    labels[0] = 10.0 * mean_luma / 255.0;
    labels[1] = 10.0 * mean_sat;
    labels[2] = 10.0 * spec.stroke_jitter;
    labels[3] = 10.0 * (4 - spec.shape_kinds) / 3.0;
    labels[4] = 10.0 * spec.scatter;
    labels[5] = 10.0 * (1.0 - covered_frac);
    labels[6] = 10.0 * (1.0 - static_cast<double>(spec.element_count) / kMaxElements);
    labels[7] = 10.0 * spec.symmetry;
    labels.validate();

    GeneratedPainting out;
    out.record.id = "syn-" + std::to_string(seed);
    out.record.image = std::move(img);
    out.record.annotations.push_back(labels);
    out.record.provenance.kind = Provenance::Kind::Synthetic;
    out.record.provenance.seed = seed;
    out.record.provenance.generator_version = kGeneratorVersion;
    out.covered_fraction = covered_frac;
    out.mean_luminance = mean_luma;
    out.mean_saturation = mean_sat;
    return out;
}

}  // namespace aacp::data
