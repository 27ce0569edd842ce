#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppm/error.hpp"
#include "ppm/raster.hpp"

namespace ppm {

class PfmError : public DataError {
 public:
  enum class Kind { kBadMagic, kBadHeader, kZeroScale, kTruncated, kNonFinite, kIo };

  PfmError(Kind kind, const std::string& what) : DataError("pfm: " + what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Encodes a raster as Portable Float Map. A negative `scale` writes
/// little-endian floats, a positive one big-endian; |scale| is stored as is.
std::vector<std::uint8_t> write_pfm(const FloatRaster& raster, float scale = -1.0f);

/// Decodes a PFM stream. Rows are returned top-to-bottom.
FloatRaster read_pfm(std::span<const std::uint8_t> bytes);

void save_pfm(const std::filesystem::path& path, const FloatRaster& raster, float scale = -1.0f);
FloatRaster load_pfm(const std::filesystem::path& path);

}  // namespace ppm
