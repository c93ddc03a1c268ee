#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "crisisspot/tensor.hpp"

namespace crisisspot {

/// On-disk tensor layout: "CSPT", u16 version, u32 rows, u32 cols, then
/// rows*cols little-endian float32 values in row-major order.
inline constexpr char kTensorMagic[4] = {'C', 'S', 'P', 'T'};
inline constexpr std::uint16_t kTensorVersion = 1;

void write_tensor(std::ostream& out, const Tensor2D& m);
/// `context` names the source in error messages (a path or checkpoint entry).
Tensor2D read_tensor(std::istream& in, const std::string& context);

void save_tensor(const std::filesystem::path& path, const Tensor2D& m);
Tensor2D load_tensor(const std::filesystem::path& path);

/// Reads only the header and returns {rows, cols}; used to validate shapes
/// without pulling payloads.
std::pair<std::uint32_t, std::uint32_t> peek_tensor_shape(const std::filesystem::path& path);

}  // namespace crisisspot
