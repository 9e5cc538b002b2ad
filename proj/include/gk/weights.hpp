#pragma once

// Weight container format "GKW1":
//   magic "GKW1" | u32 version | u32 tensor_count
//   per tensor: u16 name_len | name bytes | u8 rank | u32 dims[rank] | f32 payload
// All integers and floats little-endian.

#include <cstring>
#include <fstream>

#include "gk/error.hpp"
#include "gk/tensor.hpp"

namespace gk {

constexpr std::uint32_t kWeightFormatVersion = 1;

namespace detail {

template <typename U>
void write_le(std::ostream& out, U v) {
    static_assert(std::is_integral_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i)
        out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename U>
U read_le(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        const int c = in.get();
        if (c == EOF) throw data_error(path + ": truncated weight file");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<U>(v);
}

inline void write_f32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_le<std::uint32_t>(out, bits);
}

inline float read_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = read_le<std::uint32_t>(in, path);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace detail

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline void save_weights(const std::string& path, const NamedTensors& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(path + ": cannot open for write");
    out.write("GKW1", 4);
    detail::write_le<std::uint32_t>(out, kWeightFormatVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xffff) throw data_error("tensor name too long: " + name);
        detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        out.put(static_cast<char>(t.shape.size()));
        for (auto d : t.shape) detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (float v : t.data) detail::write_f32(out, v);
    }
    if (!out) throw data_error(path + ": write failed");
}

inline NamedTensors load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "GKW1", 4) != 0)
        throw data_error(path + ": bad magic, not a GKW1 weight file");
    const auto version = detail::read_le<std::uint32_t>(in, path);
    if (version != kWeightFormatVersion)
        throw data_error(path + ": unsupported weight version " + std::to_string(version));
    const auto count = detail::read_le<std::uint32_t>(in, path);
    NamedTensors tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_le<std::uint16_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != name_len) throw data_error(path + ": truncated tensor name");
        const int rank = in.get();
        if (rank == EOF || rank > 8) throw data_error(path + ": bad tensor rank");
        std::vector<std::size_t> shape;
        for (int r = 0; r < rank; ++r)
            shape.push_back(detail::read_le<std::uint32_t>(in, path));
        Tensor t(shape);
        for (auto& v : t.data) v = detail::read_f32(in, path);
        tensors.emplace_back(std::move(name), std::move(t));
    }
    return tensors;
}

// Copies stored tensors into a model's parameters, by name, shapes checked.
template <typename Model>
void load_into(Model& model, const NamedTensors& tensors) {
    auto refs = model.params();
    if (refs.size() != tensors.size())
        throw data_error("weight count mismatch: file has " + std::to_string(tensors.size()) +
                         ", model wants " + std::to_string(refs.size()));
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].name != tensors[i].first)
            throw data_error("weight name mismatch at index " + std::to_string(i) + ": '" +
                             tensors[i].first + "' vs model '" + refs[i].name + "'");
        if (refs[i].value->shape != tensors[i].second.shape)
            throw data_error("weight shape mismatch for " + refs[i].name);
        refs[i].value->data = tensors[i].second.data;
    }
}

template <typename Model>
NamedTensors snapshot(Model& model) {
    NamedTensors out;
    for (auto& p : model.params()) out.emplace_back(p.name, *p.value);
    return out;
}

}  // namespace gk
