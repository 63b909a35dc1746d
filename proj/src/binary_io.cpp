#include "nls4/binary_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace nls4 {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'L', 'S', '4', 'B', 'L', 'K', '\0'};

template <typename T>
void put(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = char((bits >> (8 * i)) & 0xff);
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw Error("read_block: truncated file " + path);
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= U(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_block(const std::string& path, const Block& block) {
  const auto& h = block.header;
  if (std::uint64_t(block.data.rows()) != h.rows || std::uint64_t(block.data.cols()) != h.cols)
    throw PreconditionError("write_block: header shape does not match data");

  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("write_block: cannot open " + tmp);
    os.write(kMagic.data(), kMagic.size());
    put(os, h.version);
    put(os, static_cast<std::uint32_t>(h.kind));
    put(os, h.dimension);
    put(os, std::uint32_t{0});
    put(os, h.num_points);
    put(os, h.r_max);
    put(os, h.potential_hash);
    put(os, h.rows);
    put(os, h.cols);
    put(os, std::uint64_t(block.trailer.size()));
    for (Index i = 0; i < block.data.rows(); ++i)
      for (Index j = 0; j < block.data.cols(); ++j) put(os, block.data(i, j));
    for (double v : block.trailer) put(os, v);
    if (!os.flush()) throw Error("write_block: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

Block read_block(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_block: cannot open " + path);
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error("read_block: bad magic in " + path);
  Block block;
  auto& h = block.header;
  h.version = get<std::uint32_t>(is, path);
  if (h.version != 1) throw Error("read_block: unsupported version in " + path);
  h.kind = static_cast<BlockKind>(get<std::uint32_t>(is, path));
  h.dimension = get<std::int32_t>(is, path);
  (void)get<std::uint32_t>(is, path);
  h.num_points = get<std::uint64_t>(is, path);
  h.r_max = get<double>(is, path);
  h.potential_hash = get<std::uint64_t>(is, path);
  h.rows = get<std::uint64_t>(is, path);
  h.cols = get<std::uint64_t>(is, path);
  const auto trailer_len = get<std::uint64_t>(is, path);
  if (h.rows > (1u << 20) || h.cols > (1u << 20) || trailer_len > (1u << 24))
    throw Error("read_block: implausible sizes in " + path);
  block.data.resize(Index(h.rows), Index(h.cols));
  for (Index i = 0; i < block.data.rows(); ++i)
    for (Index j = 0; j < block.data.cols(); ++j) block.data(i, j) = get<double>(is, path);
  block.trailer.resize(trailer_len);
  for (auto& v : block.trailer) v = get<double>(is, path);
  return block;
}

}  // namespace nls4
