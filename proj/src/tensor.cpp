#include "vfa/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vfa/error.hpp"

namespace vfa {

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_)
    : shape(std::move(shape_)), data(element_count(shape), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (data.size() != element_count(shape))
        throw ShapeMismatch("tensor: payload size does not match shape");
}

std::size_t Tensor::element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    nlohmann::ordered_json header;
    header["shape"] = t.shape;
    header["dtype"] = "f32";
    header["order"] = "row-major";
    out << header.dump() << '\n';
    std::vector<std::uint32_t> raw(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i)
        raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(t.data[i]));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    if (!out) throw FormatError("tensor: write failed");
}

Tensor read_tensor(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("tensor: missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("tensor: bad header: ") + e.what());
    }
    if (header.value("dtype", "") != "f32")
        throw FormatError("tensor: only dtype f32 is supported");
    if (header.value("order", "") != "row-major")
        throw FormatError("tensor: only row-major order is supported");
    if (!header.contains("shape") || !header["shape"].is_array())
        throw FormatError("tensor: header lacks shape");
    std::vector<std::size_t> shape = header["shape"].get<std::vector<std::size_t>>();
    const std::size_t n = Tensor::element_count(shape);
    std::vector<std::uint32_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(std::uint32_t))
        throw FormatError("tensor: truncated payload");
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i)
        data[i] = std::bit_cast<float>(to_little_endian(raw[i]));
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("tensor: cannot open " + path.string());
    write_tensor(out, t);
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("tensor: cannot open " + path.string());
    return read_tensor(in);
}

}  // namespace vfa
