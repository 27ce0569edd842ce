#include "ppm/pfm.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ppm {
namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string format_scale(float scale) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), scale);
  std::string s(buf, end);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

bool is_space(std::uint8_t c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    return std::string(reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start);
  }

  // The header ends with exactly one whitespace byte after the scale.
  bool consume_terminator() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) return false;
    ++pos_;
    return true;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<std::uint8_t> write_pfm(const FloatRaster& raster, float scale) {
  if (scale == 0.0f || !std::isfinite(scale)) throw PfmError(PfmError::Kind::kZeroScale, "scale must be finite and non-zero");
  if (!raster.all_finite()) throw PfmError(PfmError::Kind::kNonFinite, "raster contains non-finite values");

  const std::string header = std::string(raster.channels() == 3 ? "PF" : "Pf") + "\n" + std::to_string(raster.width()) +
                             " " + std::to_string(raster.height()) + "\n" + format_scale(scale) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + raster.size() * sizeof(float));

  const bool want_little = scale < 0.0f;
  const bool swap = want_little != (std::endian::native == std::endian::little);
  const std::size_t row_len = static_cast<std::size_t>(raster.width()) * raster.channels();
  auto data = raster.data();
  for (int y = raster.height() - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(data[y * row_len + i]);
      if (swap) bits = byteswap32(bits);
      std::uint8_t b[4];
      std::memcpy(b, &bits, 4);
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

FloatRaster read_pfm(std::span<const std::uint8_t> bytes) {
  HeaderCursor cur(bytes);
  const std::string magic = cur.token();
  int channels = 0;
  if (magic == "Pf")
    channels = 1;
  else if (magic == "PF")
    channels = 3;
  else
    throw PfmError(PfmError::Kind::kBadMagic, "unknown magic '" + magic + "'");

  int width = 0, height = 0;
  if (!parse_number(cur.token(), width) || !parse_number(cur.token(), height) || width <= 0 || height <= 0)
    throw PfmError(PfmError::Kind::kBadHeader, "invalid dimensions");
  float scale = 0.0f;
  if (!parse_number(cur.token(), scale) || !std::isfinite(scale))
    throw PfmError(PfmError::Kind::kBadHeader, "invalid scale");
  if (scale == 0.0f) throw PfmError(PfmError::Kind::kZeroScale, "scale is zero");
  if (!cur.consume_terminator()) throw PfmError(PfmError::Kind::kBadHeader, "missing header terminator");

  const std::size_t row_len = static_cast<std::size_t>(width) * channels;
  const std::size_t count = row_len * height;
  const std::size_t offset = cur.position();
  if (bytes.size() - offset < count * sizeof(float))
    throw PfmError(PfmError::Kind::kTruncated, "payload has " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                                                   std::to_string(count * sizeof(float)));

  const bool swap = (scale < 0.0f) != (std::endian::native == std::endian::little);
  std::vector<float> data(count);
  for (int y = 0; y < height; ++y) {
    // File rows run bottom-to-top.
    const std::size_t src_row = static_cast<std::size_t>(height - 1 - y);
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + offset + (src_row * row_len + i) * sizeof(float), 4);
      if (swap) bits = byteswap32(bits);
      data[y * row_len + i] = std::bit_cast<float>(bits);
    }
  }
  return FloatRaster(width, height, channels, std::move(data));
}

void save_pfm(const std::filesystem::path& path, const FloatRaster& raster, float scale) {
  const auto bytes = write_pfm(raster, scale);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PfmError(PfmError::Kind::kIo, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw PfmError(PfmError::Kind::kIo, "write failed for " + path.string());
}

FloatRaster load_pfm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PfmError(PfmError::Kind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return read_pfm(bytes);
  } catch (const PfmError& e) {
    throw PfmError(e.kind(), path.string() + ": " + std::string(e.what()).substr(5));
  }
}

}  // namespace ppm
