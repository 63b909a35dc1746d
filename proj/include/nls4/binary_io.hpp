#pragma once

// Little-endian block files shared by the eigendecomposition cache and the
// field snapshots.
//
// layout: magic[8] "NLS4BLK\0", version u32, kind u32, n i32, reserved u32,
// N u64, r_max f64, potential_hash u64, rows u64, cols u64, trailer_len u64,
// then rows*cols f64 (row-major), then trailer_len f64.

#include <cstdint>
#include <string>
#include <vector>

#include "nls4/types.hpp"

namespace nls4 {

enum class BlockKind : std::uint32_t { free_eigen = 1, full_eigen = 2, field = 3 };

struct BlockHeader {
  std::uint32_t version = 1;
  BlockKind kind = BlockKind::field;
  std::int32_t dimension = 0;
  std::uint64_t num_points = 0;
  double r_max = 0;
  std::uint64_t potential_hash = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

struct Block {
  BlockHeader header;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data;
  std::vector<double> trailer;
};

/// Writes to a temporary sibling and renames it into place.
void write_block(const std::string& path, const Block& block);
Block read_block(const std::string& path);

}  // namespace nls4
