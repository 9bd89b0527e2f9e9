#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "lfpp/field.hpp"

namespace lfpp {

// Field cache file layout, all little-endian, no padding:
//   magic "LFPPFLD1" (8) | version u32 | n u32 | half_width f64 | pad_factor u32 |
//   seed u64 | kind u8 (0 raw, 1 mollified) | eps f64 | calibration f64
// followed by n*n row-major f64 values.
inline constexpr std::uint32_t kFieldFormatVersion = 1;
inline constexpr std::size_t kFieldHeaderBytes = 53;

void save_field(const Field& field, const std::filesystem::path& path);
Field load_field(const std::filesystem::path& path);

// One file per (grid, seed, kind, eps) under a root directory. Insertion
// writes a temporary file and renames it into place.
class FieldCache {
 public:
  explicit FieldCache(std::filesystem::path root);

  // Root from LFPP_CACHE_DIR when set, otherwise the fallback (no cache when empty).
  static std::optional<FieldCache> from_environment(const std::filesystem::path& fallback = {});

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path_for(const GridSpec& spec, std::uint64_t seed, FieldKind kind,
                                 double eps) const;
  std::optional<Field> find(const GridSpec& spec, std::uint64_t seed, FieldKind kind,
                            double eps) const;
  void insert(const Field& field) const;

 private:
  std::filesystem::path root_;
};

}  // namespace lfpp
