#include "crisisspot/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "crisisspot/errors.hpp"

namespace crisisspot {
namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
bool get_le(std::istream& in, U& v) {
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) return false;
    v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return true;
}

struct Header {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
};

Header read_header(std::istream& in, const std::string& context) {
    char magic[4];
    if (!in.read(magic, 4)) throw DataError("truncated tensor header: " + context);
    if (std::memcmp(magic, kTensorMagic, 4) != 0) throw DataError("bad tensor magic: " + context);
    std::uint16_t version = 0;
    Header h;
    if (!get_le(in, version) || !get_le(in, h.rows) || !get_le(in, h.cols))
        throw DataError("truncated tensor header: " + context);
    if (version != kTensorVersion)
        throw DataError("unsupported tensor version " + std::to_string(version) + ": " + context);
    if (h.rows == 0 || h.cols == 0)
        throw DataError("empty tensor (" + std::to_string(h.rows) + "x" + std::to_string(h.cols) +
                        "): " + context);
    return h;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor2D& m) {
    out.write(kTensorMagic, 4);
    put_le<std::uint16_t>(out, kTensorVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (float v : m.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

Tensor2D read_tensor(std::istream& in, const std::string& context) {
    const Header h = read_header(in, context);
    Tensor2D m(h.rows, h.cols);
    for (auto& v : m.data()) {
        std::uint32_t bits = 0;
        if (!get_le(in, bits)) {
            throw DataError("truncated tensor payload (expected " + std::to_string(m.size()) +
                            " values): " + context);
        }
        v = std::bit_cast<float>(bits);
    }
    return m;
}

void save_tensor(const std::filesystem::path& path, const Tensor2D& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write tensor file: " + path.string());
    write_tensor(out, m);
    if (!out) throw DataError("failed writing tensor file: " + path.string());
}

Tensor2D load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing tensor file: " + path.string());
    return read_tensor(in, path.string());
}

std::pair<std::uint32_t, std::uint32_t> peek_tensor_shape(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing tensor file: " + path.string());
    const Header h = read_header(in, path.string());
    return {h.rows, h.cols};
}

}  // namespace crisisspot
