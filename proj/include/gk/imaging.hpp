#pragma once

// Pure raster primitives. Conventions, fixed project-wide:
//   - pixels outside the image are background,
//   - connected components are 8-connected,
//   - the distance transform metric is city-block (4-neighbor chamfer).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "gk/image.hpp"

namespace gk {

inline Frame to_grayscale(const Frame& frame) {
    if (frame.channels == 1) return frame;
    Frame out(frame.width, frame.height, 1);
    for (std::size_t p = 0; p < frame.pixel_count(); ++p) {
        const double r = frame.data[p * 3 + 0];
        const double g = frame.data[p * 3 + 1];
        const double b = frame.data[p * 3 + 2];
        const long v = std::lround(0.299 * r + 0.587 * g + 0.114 * b);
        out.data[p] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    return out;
}

struct OtsuResult {
    int threshold = 0;
    BinaryMask mask;
    bool degenerate = false;  // constant input image
};

// Foreground is "pixel > threshold". The threshold maximizes between-class
// variance; ties resolve to the smallest threshold.
inline OtsuResult otsu_threshold(const Frame& gray) {
    if (gray.channels != 1) throw std::invalid_argument("otsu_threshold: expects 1-channel frame");
    std::array<std::size_t, 256> hist{};
    for (std::uint8_t v : gray.data) hist[v]++;
    const double total = static_cast<double>(gray.data.size());

    OtsuResult res;
    res.mask = BinaryMask(gray.width, gray.height);

    int lo = 0, hi = 255;
    while (hist[lo] == 0) ++lo;
    while (hist[hi] == 0) --hi;
    if (lo == hi) {
        res.threshold = lo;
        res.degenerate = true;
        return res;  // mask stays all background
    }

    double best = -1.0;
    int best_t = 0;
    double w0 = 0.0, sum0 = 0.0;
    double sum_all = 0.0;
    for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(hist[v]) * v;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(hist[t]);
        sum0 += static_cast<double>(hist[t]) * t;
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    res.threshold = best_t;
    for (std::size_t i = 0; i < gray.data.size(); ++i)
        if (gray.data[i] > best_t) res.mask.data[i] = 255;
    return res;
}

// Fixed-cutoff variant used for the motion mask.
inline BinaryMask fixed_threshold(const Frame& gray, int threshold) {
    if (gray.channels != 1) throw std::invalid_argument("fixed_threshold: expects 1-channel frame");
    BinaryMask m(gray.width, gray.height);
    for (std::size_t i = 0; i < gray.data.size(); ++i)
        if (gray.data[i] > threshold) m.data[i] = 255;
    return m;
}

enum class MorphOp { erode, dilate, open, close };

namespace detail {

template <bool Erode>
inline BinaryMask morph_basic(const BinaryMask& mask, int kernel) {
    const int r = kernel / 2;
    BinaryMask out(mask.width, mask.height);
    for (int row = 0; row < mask.height; ++row) {
        for (int col = 0; col < mask.width; ++col) {
            bool acc = Erode;  // erode: all foreground; dilate: any foreground
            for (int dr = -r; dr <= r && acc == Erode; ++dr) {
                for (int dc = -r; dc <= r; ++dc) {
                    const bool f = mask.fg(row + dr, col + dc);  // outside counts as background
                    if (Erode && !f) {
                        acc = false;
                        break;
                    }
                    if (!Erode && f) {
                        acc = true;
                        break;
                    }
                }
            }
            if (acc) out.at(row, col) = 255;
        }
    }
    return out;
}

}  // namespace detail

inline BinaryMask morph(const BinaryMask& mask, MorphOp op, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("morph: kernel side must be odd and >= 1");
    switch (op) {
        case MorphOp::erode: return detail::morph_basic<true>(mask, kernel);
        case MorphOp::dilate: return detail::morph_basic<false>(mask, kernel);
        case MorphOp::open:
            return detail::morph_basic<false>(detail::morph_basic<true>(mask, kernel), kernel);
        case MorphOp::close:
            return detail::morph_basic<true>(detail::morph_basic<false>(mask, kernel), kernel);
    }
    throw std::invalid_argument("morph: bad op");
}

struct Contour {
    std::vector<std::pair<int, int>> pixels;  // ordered (row, col) boundary trace
    std::size_t area = 0;                     // enclosed foreground pixel count
    int top = 0, left = 0, bottom = 0, right = 0;
};

namespace detail {

// Moore-neighbor boundary trace over one labeled component, clockwise in
// image coordinates (row grows downward). Stops on Jacob's criterion: the
// start pixel is left a second time in the same direction.
inline std::vector<std::pair<int, int>> trace_boundary(const std::vector<int>& labels, int width,
                                                       int height, int label, int start_row,
                                                       int start_col) {
    auto is_comp = [&](int r, int c) {
        return r >= 0 && r < height && c >= 0 && c < width &&
               labels[static_cast<std::size_t>(r) * width + c] == label;
    };
    // clockwise ring: W, NW, N, NE, E, SE, S, SW (consecutive entries are adjacent cells)
    static constexpr int DR[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    static constexpr int DC[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    auto dir_index = [](int dr, int dc) {
        for (int d = 0; d < 8; ++d)
            if (DR[d] == dr && DC[d] == dc) return d;
        return 0;
    };

    std::vector<std::pair<int, int>> trace;
    trace.emplace_back(start_row, start_col);

    int cur_r = start_row, cur_c = start_col;
    // Start pixel is the topmost-leftmost of its component, so W is background.
    int prev_r = start_row, prev_c = start_col - 1;
    int first_dir = -1;
    const std::size_t guard = static_cast<std::size_t>(width) * height * 8 + 16;
    for (std::size_t steps = 0; steps < guard; ++steps) {
        const int back = dir_index(prev_r - cur_r, prev_c - cur_c);
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (is_comp(cur_r + DR[d], cur_c + DC[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) return trace;  // isolated pixel
        if (cur_r == start_row && cur_c == start_col) {
            if (first_dir < 0) {
                first_dir = found;
            } else if (found == first_dir) {
                if (trace.size() > 1 && trace.back() == trace.front()) trace.pop_back();
                return trace;
            }
        }
        const int before = (found + 7) % 8;  // last cell examined before 'found': background
        prev_r = cur_r + DR[before];
        prev_c = cur_c + DC[before];
        cur_r += DR[found];
        cur_c += DC[found];
        trace.emplace_back(cur_r, cur_c);
    }
    return trace;
}

}  // namespace detail

// 8-connected components, largest area first. Ties keep scan order.
inline std::vector<Contour> connected_components(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
    std::vector<Contour> comps;
    std::vector<std::pair<int, int>> stack;

    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            if (mask.at(row, col) == 0 || labels[static_cast<std::size_t>(row) * w + col] != 0)
                continue;
            const int label = static_cast<int>(comps.size()) + 1;
            Contour c;
            c.top = c.bottom = row;
            c.left = c.right = col;
            stack.clear();
            stack.emplace_back(row, col);
            labels[static_cast<std::size_t>(row) * w + col] = label;
            while (!stack.empty()) {
                auto [r, cc] = stack.back();
                stack.pop_back();
                c.area++;
                c.top = std::min(c.top, r);
                c.bottom = std::max(c.bottom, r);
                c.left = std::min(c.left, cc);
                c.right = std::max(c.right, cc);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = r + dr, nc = cc + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                        std::size_t idx = static_cast<std::size_t>(nr) * w + nc;
                        if (mask.data[idx] != 0 && labels[idx] == 0) {
                            labels[idx] = label;
                            stack.emplace_back(nr, nc);
                        }
                    }
            }
            // start pixel of the scan is the topmost-leftmost of the component
            c.pixels = detail::trace_boundary(labels, w, h, label, row, col);
            comps.push_back(std::move(c));
        }
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const Contour& a, const Contour& b) { return a.area > b.area; });
    return comps;
}

struct DistanceMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> dist;  // row-major, 0 on background

    std::int32_t at(int row, int col) const {
        return dist[static_cast<std::size_t>(row) * width + col];
    }
};

// Two-pass city-block chamfer. The implicit border beyond the image is
// background, so an all-foreground mask measures to the frame edge.
inline DistanceMap distance_transform(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    DistanceMap dm;
    dm.width = w;
    dm.height = h;
    const std::int32_t inf = std::numeric_limits<std::int32_t>::max() / 4;
    dm.dist.assign(static_cast<std::size_t>(w) * h, 0);

    auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };

    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (mask.at(r, c) == 0) {
                dm.dist[idx(r, c)] = 0;
                continue;
            }
            std::int32_t d = inf;
            const std::int32_t up = (r > 0) ? dm.dist[idx(r - 1, c)] : 0;
            const std::int32_t left = (c > 0) ? dm.dist[idx(r, c - 1)] : 0;
            d = std::min(d, up + 1);
            d = std::min(d, left + 1);
            dm.dist[idx(r, c)] = d;
        }
    for (int r = h - 1; r >= 0; --r)
        for (int c = w - 1; c >= 0; --c) {
            if (mask.at(r, c) == 0) continue;
            const std::int32_t down = (r + 1 < h) ? dm.dist[idx(r + 1, c)] : 0;
            const std::int32_t right = (c + 1 < w) ? dm.dist[idx(r, c + 1)] : 0;
            std::int32_t& d = dm.dist[idx(r, c)];
            d = std::min(d, down + 1);
            d = std::min(d, right + 1);
        }
    return dm;
}

}  // namespace gk
