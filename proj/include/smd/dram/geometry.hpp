#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smd/common.hpp"

namespace smd::dram {

struct Geometry {
  int channels = 4;
  int ranks = 2;
  int chips_per_rank = 8;
  int bankgroups = 4;
  int banks_per_group = 4;
  int rows_per_bank = 131072;
  int rows_per_subarray = 512;
  int subarrays_per_region = 16;
  int row_size = 8192;  // bytes per rank-wide row
  int cacheline = 64;

  int banks() const { return bankgroups * banks_per_group; }
  int subarrays_per_bank() const { return rows_per_bank / rows_per_subarray; }
  int region_rows() const { return subarrays_per_region * rows_per_subarray; }
  int regions_per_bank() const { return rows_per_bank / region_rows(); }
  int columns() const { return row_size / cacheline; }
  std::uint64_t capacity() const;

  int subarray_of(int row) const { return row / rows_per_subarray; }
  int region_of(int row) const { return row / region_rows(); }

  // Throws ConfigError when the shape is inconsistent.
  void validate() const;
};

struct DramAddress {
  int channel = 0;
  int rank = 0;
  int bankgroup = 0;
  int bank = 0;
  int row = 0;
  int column = 0;

  bool operator==(const DramAddress&) const = default;
};

// bank index within a rank, 0..banks()-1
inline int flat_bank(const Geometry& g, const DramAddress& a) {
  return a.bankgroup * g.banks_per_group + a.bank;
}
inline int bankgroup_of(const Geometry& g, int flat) { return flat / g.banks_per_group; }

enum class Field { Channel, Column, Rank, Bank, Row };

// Mixed-radix address mapper. The field order is given MSB first, e.g.
// "row,bank,rank,column,channel"; the cacheline offset is always lowest.
// The bank field spans bank groups and banks, with the bank group varying
// fastest so that consecutive bank indices alternate groups.
class AddressMapper {
 public:
  explicit AddressMapper(const Geometry& g,
                         const std::string& order = "row,bank,rank,column,channel");

  DramAddress decode(std::uint64_t addr) const;
  std::uint64_t encode(const DramAddress& a) const;
  const Geometry& geometry() const { return geom_; }

 private:
  std::uint64_t radix(Field f) const;

  Geometry geom_;
  std::vector<Field> lsb_first_;
};

}  // namespace smd::dram
