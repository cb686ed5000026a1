#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

// Self-describing binary checkpoint: a config hash, named string sections
// (config echo, vocabularies) and named parameter tensors with shapes and
// row-major doubles. Write/read round-trips are bit-exact.
struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::map<std::string, std::string> strings;               // ordered: stable bytes
    std::vector<std::pair<std::string, Tensor>> tensors;      // documented order

    const Tensor& tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw ContractError("checkpoint: no tensor named '" + name + "'");
    }

    bool has_tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return true;
        return false;
    }

    const std::string& string(const std::string& name) const {
        auto it = strings.find(name);
        if (it == strings.end()) throw ContractError("checkpoint: no section named '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'R', 'E', 'L', 'A', 'T', 'T', '0', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ParseError("checkpoint: truncated file");
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_raw<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    auto len = read_raw<std::uint64_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw ParseError("checkpoint: truncated string");
    return s;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    os.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
    detail::write_raw<std::uint64_t>(os, ckpt.config_hash);
    detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.strings.size()));
    for (const auto& [name, value] : ckpt.strings) {
        detail::write_string(os, name);
        detail::write_string(os, value);
    }
    detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        detail::write_string(os, name);
        detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
        for (int e : t.shape()) detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(e));
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, detail::kCkptMagic, sizeof(magic)) != 0)
        throw ParseError("checkpoint: bad magic in '" + path + "'");
    Checkpoint ckpt;
    ckpt.config_hash = detail::read_raw<std::uint64_t>(is);
    auto n_strings = detail::read_raw<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_strings; ++i) {
        std::string name = detail::read_string(is);
        ckpt.strings[name] = detail::read_string(is);
    }
    auto n_tensors = detail::read_raw<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = detail::read_string(is);
        auto ndim = detail::read_raw<std::uint32_t>(is);
        std::vector<int> shape(ndim);
        std::int64_t n = 1;
        for (auto& e : shape) {
            e = static_cast<int>(detail::read_raw<std::uint32_t>(is));
            n *= e;
        }
        std::vector<double> data(static_cast<std::size_t>(n));
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw ParseError("checkpoint: truncated tensor '" + name + "'");
        ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return ckpt;
}

}  // namespace relatt
