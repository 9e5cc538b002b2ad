#pragma once

// Hand extraction: background differencing, HSV skin masking, largest-contour
// selection, palm center/radius from the distance transform, wrist cut, and
// the square crop handed to the classifiers.

#include <cmath>
#include <optional>

#include "gk/error.hpp"
#include "gk/imaging.hpp"

namespace gk {

struct BackgroundModel {
    Frame reference;         // grayscale
    int diff_threshold = 30;  // intensity delta, >= 1

    BackgroundModel() = default;
    BackgroundModel(Frame ref, int threshold)
        : reference(std::move(ref)), diff_threshold(threshold) {
        if (reference.channels != 1)
            throw std::invalid_argument("BackgroundModel: reference must be grayscale");
        if (diff_threshold < 1) throw std::invalid_argument("BackgroundModel: threshold < 1");
    }
};

// Hue in degrees [0,360); sat/val in [0,1]. hue_lo > hue_hi wraps through 0.
struct SkinRange {
    double hue_lo = 340.0, hue_hi = 35.0;
    double sat_lo = 0.15, sat_hi = 1.00;
    double val_lo = 0.20, val_hi = 1.00;

    bool hue_in(double h) const {
        if (hue_lo <= hue_hi) return h >= hue_lo && h <= hue_hi;
        return h >= hue_lo || h <= hue_hi;
    }
};

struct HandRegion {
    Contour contour;
    int palm_row = 0, palm_col = 0;
    int palm_radius = 1;
    BinaryMask roi;  // wrist-cut, cropped to its bounding box
    int source_width = 0, source_height = 0;
};

struct SegmentationConfig {
    SkinRange skin_range;
    int diff_threshold = 30;
    double cut_factor = 1.6;
    double min_area_frac = 0.01;  // of frame pixels
    int input_side = 64;
    int open_kernel = 3;  // pre-detection speckle cleanup
};

inline BinaryMask motion_mask(const BackgroundModel& model, const Frame& frame) {
    if (frame.channels != 1)
        throw std::invalid_argument("motion_mask: frame must be grayscale (convert first)");
    if (frame.width != model.reference.width || frame.height != model.reference.height)
        throw std::invalid_argument("motion_mask: frame/reference dimension mismatch");
    BinaryMask m(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const int d = std::abs(int(frame.data[i]) - int(model.reference.data[i]));
        if (d > model.diff_threshold) m.data[i] = 255;
    }
    return m;
}

// Standard hexcone RGB -> HSV; H in degrees, S and V in [0,1].
inline void rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8, double& h, double& s,
                       double& v) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double c = mx - mn;
    v = mx;
    s = (mx <= 0.0) ? 0.0 : c / mx;
    if (c <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) h = 60.0 * std::fmod((g - b) / c + 6.0, 6.0);
    else if (mx == g) h = 60.0 * ((b - r) / c + 2.0);
    else h = 60.0 * ((r - g) / c + 4.0);
}

inline BinaryMask skin_mask(const Frame& frame, const SkinRange& range) {
    if (frame.channels != 3) throw std::invalid_argument("skin_mask: expects 3-channel frame");
    BinaryMask m(frame.width, frame.height);
    for (std::size_t p = 0; p < frame.pixel_count(); ++p) {
        double h, s, v;
        rgb_to_hsv(frame.data[p * 3], frame.data[p * 3 + 1], frame.data[p * 3 + 2], h, s, v);
        if (range.hue_in(h) && s >= range.sat_lo && s <= range.sat_hi && v >= range.val_lo &&
            v <= range.val_hi)
            m.data[p] = 255;
    }
    return m;
}

inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mask_and: dimension mismatch");
    BinaryMask out(a.width, a.height);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = (a.data[i] != 0 && b.data[i] != 0) ? 255 : 0;
    return out;
}

inline BinaryMask crop_to_bbox(const BinaryMask& mask) {
    int top = mask.height, left = mask.width, bottom = -1, right = -1;
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c)
            if (mask.at(r, c) != 0) {
                top = std::min(top, r);
                bottom = std::max(bottom, r);
                left = std::min(left, c);
                right = std::max(right, c);
            }
    if (bottom < 0) throw std::invalid_argument("crop_to_bbox: empty mask");
    BinaryMask out(right - left + 1, bottom - top + 1);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) out.at(r, c) = mask.at(top + r, left + c);
    return out;
}

// Clears foreground below the line row > center_row + cut_factor * radius
// (upright camera, arm entering from the bottom), then crops to the bbox.
inline BinaryMask wrist_cut(const BinaryMask& mask, int center_row, int center_col, int radius,
                            double cut_factor) {
    (void)center_col;
    if (cut_factor <= 1.0) throw std::invalid_argument("wrist_cut: cut_factor must be > 1");
    const double line = center_row + cut_factor * radius;
    BinaryMask cut = mask;
    for (int r = 0; r < cut.height; ++r) {
        if (static_cast<double>(r) <= line) continue;
        for (int c = 0; c < cut.width; ++c) cut.at(r, c) = 0;
    }
    std::size_t remaining = cut.foreground_count();
    if (remaining == 0) throw data_error("wrist_cut: cut removed every foreground pixel");
    return crop_to_bbox(cut);
}

// Largest component >= min_area, palm located at the distance-transform
// argmax inside it (ties: smallest row, then smallest column).
inline std::optional<HandRegion> detect_hand(const BinaryMask& mask, std::size_t min_area,
                                             double cut_factor = 1.6) {
    auto comps = connected_components(mask);
    if (comps.empty() || comps.front().area < min_area) return std::nullopt;
    const Contour& best = comps.front();

    // Isolate the component so other blobs cannot affect its distances.
    BinaryMask only(mask.width, mask.height);
    {
        std::vector<std::pair<int, int>> stack;
        stack.emplace_back(best.pixels.front().first, best.pixels.front().second);
        only.at(stack[0].first, stack[0].second) = 255;
        while (!stack.empty()) {
            auto [r, c] = stack.back();
            stack.pop_back();
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int nr = r + dr, nc = c + dc;
                    if (mask.fg(nr, nc) && only.at(nr, nc) == 0) {
                        only.at(nr, nc) = 255;
                        stack.emplace_back(nr, nc);
                    }
                }
        }
    }

    DistanceMap dm = distance_transform(only);
    int best_r = -1, best_c = -1;
    std::int32_t best_d = 0;
    for (int r = 0; r < dm.height; ++r)
        for (int c = 0; c < dm.width; ++c) {
            const std::int32_t d = dm.at(r, c);
            if (d > best_d) {
                best_d = d;
                best_r = r;
                best_c = c;
            }
        }

    HandRegion region;
    region.contour = best;
    region.palm_row = best_r;
    region.palm_col = best_c;
    region.palm_radius = best_d;
    region.source_width = mask.width;
    region.source_height = mask.height;
    region.roi = wrist_cut(only, best_r, best_c, best_d, cut_factor);
    return region;
}

// Nearest-neighbor resize; binary in, binary out.
inline BinaryMask resize_nearest(const BinaryMask& src, int out_w, int out_h) {
    BinaryMask out(out_w, out_h);
    for (int r = 0; r < out_h; ++r) {
        const int sr = std::min(src.height - 1,
                                static_cast<int>((r + 0.5) * src.height / out_h));
        for (int c = 0; c < out_w; ++c) {
            const int sc = std::min(src.width - 1,
                                    static_cast<int>((c + 0.5) * src.width / out_w));
            out.at(r, c) = src.at(sr, sc);
        }
    }
    return out;
}

// Letterbox to a square (background padding, extra pixel right/bottom),
// nearest-neighbor resize, then open+close with a 3x3 element.
inline BinaryMask extract_input(const HandRegion& region, int side) {
    if (side != 64 && side != 128)
        throw std::invalid_argument("extract_input: side must be 64 or 128");
    const BinaryMask& roi = region.roi;
    const int sq = std::max(roi.width, roi.height);
    BinaryMask boxed(sq, sq);
    const int pad_r = (sq - roi.height) / 2;
    const int pad_c = (sq - roi.width) / 2;
    for (int r = 0; r < roi.height; ++r)
        for (int c = 0; c < roi.width; ++c) boxed.at(r + pad_r, c + pad_c) = roi.at(r, c);
    BinaryMask scaled = resize_nearest(boxed, side, side);
    return morph(morph(scaled, MorphOp::open, 3), MorphOp::close, 3);
}

}  // namespace gk
