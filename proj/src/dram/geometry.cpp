#include "smd/dram/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace smd::dram {

std::uint64_t Geometry::capacity() const {
  return static_cast<std::uint64_t>(channels) * ranks * banks() *
         static_cast<std::uint64_t>(rows_per_bank) * row_size;
}

void Geometry::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("geometry: ") + name + " must be positive");
  };
  positive(channels, "channels");
  positive(ranks, "ranks");
  positive(chips_per_rank, "chips_per_rank");
  positive(bankgroups, "bankgroups");
  positive(banks_per_group, "banks_per_group");
  positive(rows_per_bank, "rows_per_bank");
  positive(rows_per_subarray, "rows_per_subarray");
  positive(subarrays_per_region, "subarrays_per_region");
  positive(row_size, "row_size");
  positive(cacheline, "cacheline");
  if (chips_per_rank > 32) throw ConfigError("geometry: at most 32 chips per rank");
  if (rows_per_bank % rows_per_subarray != 0)
    throw ConfigError("geometry: rows_per_bank must be a multiple of rows_per_subarray");
  if (rows_per_bank % region_rows() != 0)
    throw ConfigError("geometry: region row span must divide rows_per_bank");
  if (regions_per_bank() > 64) throw ConfigError("geometry: at most 64 regions per bank");
  if (row_size % cacheline != 0) throw ConfigError("geometry: row_size must be a multiple of cacheline");
}

AddressMapper::AddressMapper(const Geometry& g, const std::string& order) : geom_(g) {
  std::vector<Field> msb_first;
  std::stringstream ss(order);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok == "row") msb_first.push_back(Field::Row);
    else if (tok == "bank") msb_first.push_back(Field::Bank);
    else if (tok == "rank") msb_first.push_back(Field::Rank);
    else if (tok == "column") msb_first.push_back(Field::Column);
    else if (tok == "channel") msb_first.push_back(Field::Channel);
    else throw ConfigError("address mapping: unknown field '" + tok + "'");
  }
  if (msb_first.size() != 5) throw ConfigError("address mapping: need exactly five fields");
  for (Field f : {Field::Row, Field::Bank, Field::Rank, Field::Column, Field::Channel})
    if (std::count(msb_first.begin(), msb_first.end(), f) != 1)
      throw ConfigError("address mapping: each field must appear once");
  lsb_first_.assign(msb_first.rbegin(), msb_first.rend());
}

std::uint64_t AddressMapper::radix(Field f) const {
  switch (f) {
    case Field::Channel: return geom_.channels;
    case Field::Column: return geom_.columns();
    case Field::Rank: return geom_.ranks;
    case Field::Bank: return geom_.banks();
    case Field::Row: return geom_.rows_per_bank;
  }
  return 1;
}

DramAddress AddressMapper::decode(std::uint64_t addr) const {
  if (addr >= geom_.capacity()) throw RangeError("address beyond capacity");
  std::uint64_t v = addr / geom_.cacheline;
  DramAddress a;
  for (Field f : lsb_first_) {
    std::uint64_t r = radix(f);
    int digit = static_cast<int>(v % r);
    v /= r;
    switch (f) {
      case Field::Channel: a.channel = digit; break;
      case Field::Column: a.column = digit; break;
      case Field::Rank: a.rank = digit; break;
      case Field::Bank:
        a.bankgroup = digit % geom_.bankgroups;
        a.bank = digit / geom_.bankgroups;
        break;
      case Field::Row: a.row = digit; break;
    }
  }
  return a;
}

std::uint64_t AddressMapper::encode(const DramAddress& a) const {
  if (a.channel < 0 || a.channel >= geom_.channels || a.rank < 0 || a.rank >= geom_.ranks ||
      a.bankgroup < 0 || a.bankgroup >= geom_.bankgroups || a.bank < 0 ||
      a.bank >= geom_.banks_per_group || a.row < 0 || a.row >= geom_.rows_per_bank ||
      a.column < 0 || a.column >= geom_.columns())
    throw RangeError("address field out of range");
  std::uint64_t v = 0;
  for (auto it = lsb_first_.rbegin(); it != lsb_first_.rend(); ++it) {
    std::uint64_t digit = 0;
    switch (*it) {
      case Field::Channel: digit = a.channel; break;
      case Field::Column: digit = a.column; break;
      case Field::Rank: digit = a.rank; break;
      case Field::Bank: digit = static_cast<std::uint64_t>(a.bank) * geom_.bankgroups + a.bankgroup; break;
      case Field::Row: digit = a.row; break;
    }
    v = v * radix(*it) + digit;
  }
  return v * geom_.cacheline;
}

}  // namespace smd::dram
