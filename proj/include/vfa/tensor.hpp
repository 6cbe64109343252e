#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace vfa {

// Dense row-major float32 tensor. The on-disk form is one JSON header line
//   {"shape":[...],"dtype":"f32","order":"row-major"}
// followed by the little-endian payload.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_);
    Tensor(std::vector<std::size_t> shape_, std::vector<float> data_);

    std::size_t size() const { return data.size(); }
    static std::size_t element_count(const std::vector<std::size_t>& shape);
};

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace vfa
