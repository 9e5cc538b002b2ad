#pragma once

// Synthetic gesture-mask generator and manifest handling. Shapes are defined
// as analytic membership tests in canonical coordinates and rasterized
// through an inverse jitter transform (translate/rotate/scale), so
// generation is exact and deterministic per (seed, index).

#include <filesystem>
#include <fstream>
#include <set>

#include "gk/error.hpp"
#include "gk/pnm.hpp"
#include "gk/rng.hpp"

namespace gk {

struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;  // (relative path, label)
    std::vector<std::string> class_names;                      // ordered, unique

    int label_index(const std::string& label) const {
        for (std::size_t i = 0; i < class_names.size(); ++i)
            if (class_names[i] == label) return int(i);
        throw data_error("label '" + label + "' not in manifest classes");
    }
};

enum class Shape { disk, square, bar, cross, star, fork };

inline const char* shape_name(Shape s) {
    switch (s) {
        case Shape::disk: return "disk";
        case Shape::square: return "square";
        case Shape::bar: return "bar";
        case Shape::cross: return "cross";
        case Shape::star: return "star";
        case Shape::fork: return "fork";
    }
    return "?";
}

inline Shape shape_from_name(const std::string& s) {
    for (Shape sh : {Shape::disk, Shape::square, Shape::bar, Shape::cross, Shape::star,
                     Shape::fork})
        if (s == shape_name(sh)) return sh;
    throw data_error("unknown shape '" + s + "'");
}

struct SynthSpec {
    std::vector<Shape> classes = {Shape::disk, Shape::square, Shape::bar, Shape::cross};
    int per_class = 200;
    int side = 64;
    double speckle = 0.01;       // probability per pixel of a flipped-on noise dot
    double max_translate = 5.0;  // pixels
    double max_rotate_deg = 20.0;
    double scale_lo = 0.85, scale_hi = 1.15;
    std::uint64_t seed = 0;

    void validate() const {
        if (classes.empty() || per_class < 1) throw std::invalid_argument("synth: empty spec");
        if (speckle < 0.0 || speckle >= 1.0)
            throw std::invalid_argument("synth: speckle must be in [0,1)");
        if (scale_lo <= 0.0 || scale_hi < scale_lo)
            throw std::invalid_argument("synth: bad scale range");
    }
};

namespace detail {

// Canonical membership tests; x is column-like, y row-like, origin centered.
inline bool shape_member(Shape s, double x, double y) {
    switch (s) {
        case Shape::disk:
            return x * x + y * y <= 20.0 * 20.0;
        case Shape::square:
            return std::abs(x) <= 11.0 && std::abs(y) <= 11.0;
        case Shape::bar:
            return std::abs(x) <= 5.0 && std::abs(y) <= 22.0;
        case Shape::cross:
            return (std::abs(x) <= 4.0 && std::abs(y) <= 22.0) ||
                   (std::abs(y) <= 4.0 && std::abs(x) <= 22.0);
        case Shape::star: {
            // eight thin arms: a plus and a 45-degree cross
            const bool plus = (std::abs(x) <= 3.0 && std::abs(y) <= 23.0) ||
                              (std::abs(y) <= 3.0 && std::abs(x) <= 23.0);
            const double u = (x + y) / std::sqrt(2.0), v = (x - y) / std::sqrt(2.0);
            const bool diag = (std::abs(u) <= 3.0 && std::abs(v) <= 23.0) ||
                              (std::abs(v) <= 3.0 && std::abs(u) <= 23.0);
            return plus || diag;
        }
        case Shape::fork: {
            // palm blob low, two fingers reaching up
            const bool palm = x * x + (y - 8.0) * (y - 8.0) <= 12.0 * 12.0;
            const bool f1 = std::abs(x + 7.0) <= 3.5 && y >= -24.0 && y <= 0.0;
            const bool f2 = std::abs(x - 7.0) <= 3.5 && y >= -24.0 && y <= 0.0;
            return palm || f1 || f2;
        }
    }
    return false;
}

}  // namespace detail

// Rasterizes one jittered, speckled sample of a shape class.
inline BinaryMask synth_mask(Shape shape, int side, const SynthSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ut(-spec.max_translate, spec.max_translate);
    std::uniform_real_distribution<double> ur(-spec.max_rotate_deg, spec.max_rotate_deg);
    std::uniform_real_distribution<double> us(spec.scale_lo, spec.scale_hi);
    const double tx = ut(rng), ty = ut(rng);
    const double theta = ur(rng) * M_PI / 180.0;
    const double scale = us(rng) * side / 64.0;  // canonical sizes assume a 64px frame
    const double ct = std::cos(-theta), st = std::sin(-theta);
    const double cx = side / 2.0 - 0.5, cy = side / 2.0 - 0.5;

    BinaryMask m(side, side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            const double px = (c - cx - tx) / scale;
            const double py = (r - cy - ty) / scale;
            const double x = px * ct - py * st;
            const double y = px * st + py * ct;
            if (detail::shape_member(shape, x, y)) m.at(r, c) = 255;
        }
    if (spec.speckle > 0.0) {
        std::bernoulli_distribution dot(spec.speckle);
        for (auto& v : m.data)
            if (dot(rng)) v = 255;
    }
    return m;
}

// Noise- and jitter-free class prototype, for separation checks.
inline BinaryMask synth_prototype(Shape shape, int side = 64) {
    SynthSpec spec;
    spec.max_translate = 0;
    spec.max_rotate_deg = 0;
    spec.scale_lo = spec.scale_hi = 1.0;
    spec.speckle = 0;
    std::mt19937_64 rng(0);
    return synth_mask(shape, side, spec, rng);
}

struct SynthDataset {
    std::vector<BinaryMask> masks;
    std::vector<int> labels;
    std::vector<std::string> class_names;
};

// In-memory generation; file layout is handled by synth_generate below.
inline SynthDataset synth_dataset(const SynthSpec& spec) {
    spec.validate();
    SynthDataset ds;
    for (Shape s : spec.classes) ds.class_names.push_back(shape_name(s));
    std::size_t index = 0;
    for (std::size_t cls = 0; cls < spec.classes.size(); ++cls)
        for (int i = 0; i < spec.per_class; ++i, ++index) {
            std::mt19937_64 rng = make_rng(spec.seed, index);
            ds.masks.push_back(synth_mask(spec.classes[cls], spec.side, spec, rng));
            ds.labels.push_back(int(cls));
        }
    return ds;
}

inline void save_manifest(const std::string& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot open for write");
    out << "path,label\n";
    for (const auto& [p, label] : manifest.entries) out << p << "," << label << "\n";
    if (!out) throw data_error(path + ": write failed");
}

// Writes dataset/<class>/<id>.pgm plus manifest.csv; returns the manifest.
inline Manifest synth_generate(const SynthSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    SynthDataset ds = synth_dataset(spec);
    Manifest manifest;
    manifest.class_names = ds.class_names;
    fs::create_directories(out_dir);
    char name[64];
    for (std::size_t i = 0; i < ds.masks.size(); ++i) {
        const std::string& cls = ds.class_names[ds.labels[i]];
        fs::create_directories(fs::path(out_dir) / cls);
        std::snprintf(name, sizeof(name), "%04d.pgm", int(i % std::size_t(spec.per_class)));
        const std::string rel = cls + "/" + name;
        write_mask((fs::path(out_dir) / rel).string(), ds.masks[i]);
        manifest.entries.emplace_back(rel, cls);
    }
    save_manifest((fs::path(out_dir) / "manifest.csv").string(), manifest);
    return manifest;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty manifest");
    // tolerate a UTF-8 BOM and CR line ends
    if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,label")
        throw data_error(path + ": bad header '" + line + "', want 'path,label'");

    Manifest manifest;
    std::set<std::string> seen_paths;
    std::set<std::string> seen_classes;
    const auto base = std::filesystem::path(path).parent_path();
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw data_error(path + ": row " + std::to_string(row) + ": want 'path,label'");
        std::string rel = line.substr(0, comma);
        std::string label = line.substr(comma + 1);
        if (rel.empty() || label.empty())
            throw data_error(path + ": row " + std::to_string(row) + ": empty field");
        if (!seen_paths.insert(rel).second)
            throw data_error(path + ": row " + std::to_string(row) + ": duplicate path " + rel);
        if (!std::filesystem::exists(base / rel))
            throw data_error(path + ": row " + std::to_string(row) + ": missing file " + rel);
        if (seen_classes.insert(label).second) manifest.class_names.push_back(label);
        manifest.entries.emplace_back(std::move(rel), std::move(label));
    }
    return manifest;
}

// Loads every mask of a manifest, labels resolved against class_names.
inline std::pair<std::vector<BinaryMask>, std::vector<int>> load_manifest_masks(
    const std::string& manifest_path, const Manifest& manifest) {
    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<BinaryMask> masks;
    std::vector<int> labels;
    for (const auto& [rel, label] : manifest.entries) {
        masks.push_back(read_mask((base / rel).string()));
        labels.push_back(manifest.label_index(label));
    }
    return {std::move(masks), std::move(labels)};
}

}  // namespace gk
