#pragma once

// PGM (P5) / PPM (P6) reader and writer, maxval 255 only.

#include <fstream>
#include <sstream>
#include <string>

#include "gk/error.hpp"
#include "gk/image.hpp"

namespace gk {

namespace detail {

inline int pnm_next_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments, then parses one unsigned integer.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw data_error(path + ": malformed PNM header near byte " +
                         std::to_string(static_cast<long long>(in.tellg())));
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1000000) throw data_error(path + ": absurd PNM header value");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(value);
}

}  // namespace detail

inline Frame read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    int channels = 0;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else throw data_error(path + ": bad PNM magic (want P5 or P6)");

    const int w = detail::pnm_next_token(in, path);
    const int h = detail::pnm_next_token(in, path);
    const int maxval = detail::pnm_next_token(in, path);
    if (w < 1 || h < 1) throw data_error(path + ": bad dimensions");
    if (maxval != 255) throw data_error(path + ": maxval " + std::to_string(maxval) + ", want 255");
    int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) throw data_error(path + ": missing raster separator");

    Frame f(w, h, channels);
    in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != f.data.size())
        throw data_error(path + ": truncated raster, got " + std::to_string(in.gcount()) +
                         " of " + std::to_string(f.data.size()) + " bytes");
    return f;
}

inline void write_pnm(const std::string& path, const Frame& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(path + ": cannot open for write");
    out << (f.channels == 1 ? "P5\n" : "P6\n") << f.width << " " << f.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.data.data()),
              static_cast<std::streamsize>(f.data.size()));
    if (!out) throw data_error(path + ": write failed");
}

// Masks travel as PGM restricted to {0,255}.
inline BinaryMask read_mask(const std::string& path) {
    Frame f = read_pnm(path);
    if (f.channels != 1) throw data_error(path + ": mask must be single-channel PGM");
    BinaryMask m(f.width, f.height);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        if (f.data[i] != 0 && f.data[i] != 255)
            throw data_error(path + ": pixel byte " + std::to_string(i) + " is " +
                             std::to_string(int(f.data[i])) + ", masks must be 0 or 255");
        m.data[i] = f.data[i];
    }
    return m;
}

inline void write_mask(const std::string& path, const BinaryMask& m) {
    Frame f(m.width, m.height, 1);
    f.data = m.data;
    write_pnm(path, f);
}

}  // namespace gk
