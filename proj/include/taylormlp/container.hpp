#pragma once

// Self-describing binary tensor container ("TMLP" files).
//
// Layout, all integers little-endian:
//   offset 0   char[4]  magic "TMLP"
//   offset 4   u16      format version (1)
//   offset 6   u16      dtype tag (1 = IEEE-754 binary64, little-endian)
//   offset 8   u32      section count
//   offset 12  u64      total file length in bytes, CRC included
//   offset 20  sections, each:
//                u32 name length, name bytes (UTF-8, no terminator),
//                u32 rank, u64 dims[rank], f64 payload[prod(dims)] row-major
//   last 4     u32      CRC-32 (IEEE 802.3, as in zlib) of every preceding byte
//
// A rank-0 section holds one scalar.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace taylormlp {

// Base of every rejection caused by the bytes themselves.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedError : IntegrityError {
  using IntegrityError::IntegrityError;
};
struct BadMagicError : IntegrityError {
  using IntegrityError::IntegrityError;
};
struct ChecksumError : IntegrityError {
  using IntegrityError::IntegrityError;
};
// Checksum passed but the content is not a valid container or does not hold
// what the caller asked for.
struct FormatError : IntegrityError {
  using IntegrityError::IntegrityError;
};
// The file could not be opened or written.
struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr char kContainerMagic[4] = {'T', 'M', 'L', 'P'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::uint16_t kDtypeF64 = 1;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  static Tensor scalar(double v) { return {{}, {v}}; }
  static Tensor vector(std::vector<double> v) {
    const auto n = static_cast<std::uint64_t>(v.size());
    return {{n}, std::move(v)};
  }
  static Tensor matrix(std::uint64_t rows, std::uint64_t cols, std::vector<double> v) {
    return {{rows, cols}, std::move(v)};
  }

  std::size_t rank() const { return dims.size(); }
  std::uint64_t element_count() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

class TensorContainer {
 public:
  // Sections keep insertion order, so encoding is deterministic.
  void put(std::string name, Tensor tensor);
  bool contains(const std::string& name) const;
  // Throws FormatError when the section is missing.
  const Tensor& get(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return sections_.size(); }

  std::vector<std::uint8_t> encode() const;
  static TensorContainer decode(std::span<const std::uint8_t> bytes);

  void write_file(const std::filesystem::path& path) const;
  static TensorContainer read_file(const std::filesystem::path& path);

  friend bool operator==(const TensorContainer&, const TensorContainer&) = default;

 private:
  std::vector<std::pair<std::string, Tensor>> sections_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace taylormlp
