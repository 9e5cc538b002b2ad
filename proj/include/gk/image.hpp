#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gk {

// Row-major raster, 1 (gray) or 3 (RGB) interleaved channels, 8 bits each.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Frame() = default;
    Frame(int w, int h, int ch, std::uint8_t fill = 0) : width(w), height(h), channels(ch) {
        if (w < 1 || h < 1 || (ch != 1 && ch != 3))
            throw std::invalid_argument("Frame: bad dimensions " + std::to_string(w) + "x" +
                                        std::to_string(h) + "x" + std::to_string(ch));
        data.assign(static_cast<std::size_t>(w) * h * ch, fill);
    }

    std::uint8_t& at(int row, int col, int ch = 0) {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::uint8_t at(int row, int col, int ch = 0) const {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    bool in_bounds(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Binary raster: every byte is 0 (background) or 255 (foreground).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("BinaryMask: bad dimensions");
        if (fill != 0 && fill != 255)
            throw std::invalid_argument("BinaryMask: fill must be 0 or 255");
        data.assign(static_cast<std::size_t>(w) * h, fill);
    }

    std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int row, int col) const {
        return data[static_cast<std::size_t>(row) * width + col];
    }
    bool fg(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width && at(row, col) != 0;
    }
    bool in_bounds(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (std::uint8_t v : data) n += (v != 0);
        return n;
    }

    void validate() const {
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i] != 0 && data[i] != 255)
                throw std::invalid_argument("BinaryMask: byte " + std::to_string(i) + " is " +
                                            std::to_string(int(data[i])) + ", expected 0 or 255");
    }
};

}  // namespace gk
