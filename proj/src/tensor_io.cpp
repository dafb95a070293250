#include "sgt/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "sgt/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "SGT1 I/O assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559,
              "SGT1 I/O requires 64-bit IEEE-754 doubles");

namespace sgt {

namespace {
constexpr char kMagic[4] = {0x53, 0x47, 0x54, 0x31};  // "SGT1"
}

void write_sgt1(std::ostream& os, const Tensor& t) {
    if (t.empty()) throw IoError("cannot write an empty tensor");
    if (t.rank() > 255) throw IoError("tensor rank exceeds SGT1 limit");
    os.write(kMagic, 4);
    const std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
    os.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t e : t.shape()) {
        const std::uint64_t v = e;
        os.write(reinterpret_cast<const char*>(&v), 8);
    }
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!os) throw IoError("SGT1 write failed");
}

Tensor read_sgt1(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad SGT1 magic");
    std::uint8_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 1);
    if (!is || rank == 0) throw IoError("bad SGT1 rank");
    Shape shape(rank);
    std::size_t total = 1;
    for (std::size_t d = 0; d < rank; ++d) {
        std::uint64_t e = 0;
        is.read(reinterpret_cast<char*>(&e), 8);
        if (!is || e == 0) throw IoError("bad SGT1 extent");
        shape[d] = static_cast<std::size_t>(e);
        total *= shape[d];
        if (total > (std::size_t{1} << 34)) throw IoError("SGT1 extent product implausibly large");
    }
    std::vector<double> values(total);
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw IoError("truncated SGT1 payload");
    return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_sgt1(os, t);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read_sgt1(is);
}

}  // namespace sgt
