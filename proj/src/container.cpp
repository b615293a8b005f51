#include "taylormlp/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace taylormlp {

namespace {

constexpr std::size_t kHeaderBytes = 20;
constexpr std::size_t kCrcBytes = 4;

class Writer {
 public:
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw FormatError("section runs past the end of the payload");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t read_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void TensorContainer::put(std::string name, Tensor tensor) {
  if (tensor.element_count() != tensor.values.size()) {
    throw FormatError("tensor '" + name + "' dims do not match its value count");
  }
  auto it = std::find_if(sections_.begin(), sections_.end(),
                         [&](const auto& s) { return s.first == name; });
  if (it != sections_.end()) {
    it->second = std::move(tensor);
  } else {
    sections_.emplace_back(std::move(name), std::move(tensor));
  }
}

bool TensorContainer::contains(const std::string& name) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const auto& s) { return s.first == name; });
}

const Tensor& TensorContainer::get(const std::string& name) const {
  for (const auto& [n, t] : sections_) {
    if (n == name) return t;
  }
  throw FormatError("container has no section '" + name + "'");
}

std::vector<std::string> TensorContainer::names() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.first);
  return out;
}

std::vector<std::uint8_t> TensorContainer::encode() const {
  Writer w;
  w.raw(kContainerMagic, 4);
  w.u16(kContainerVersion);
  w.u16(kDtypeF64);
  w.u32(static_cast<std::uint32_t>(sections_.size()));
  w.u64(0);  // patched below
  for (const auto& [name, t] : sections_) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u64(d);
    for (double v : t.values) w.f64(v);
  }
  const std::uint64_t total = w.out.size() + kCrcBytes;
  for (int i = 0; i < 8; ++i) w.out[12 + i] = static_cast<std::uint8_t>(total >> (8 * i));
  w.u32(crc32(w.out));
  return std::move(w.out);
}

TensorContainer TensorContainer::decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + kCrcBytes) {
    throw TruncatedError("container shorter than its fixed header");
  }
  if (std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    throw BadMagicError("not a TMLP container (bad magic)");
  }
  const std::uint64_t declared = read_u64_le(bytes.data() + 12);
  if (bytes.size() < declared) {
    throw TruncatedError("container truncated: " + std::to_string(bytes.size()) + " of " +
                         std::to_string(declared) + " bytes present");
  }
  if (bytes.size() > declared) {
    throw FormatError("container length field (" + std::to_string(declared) +
                      ") disagrees with the data size (" + std::to_string(bytes.size()) + ")");
  }
  const auto body = bytes.first(bytes.size() - kCrcBytes);
  const std::uint32_t stored = read_u32_le(bytes.data() + body.size());
  if (crc32(body) != stored) throw ChecksumError("container CRC mismatch");

  Reader r(body);
  r.str(4);
  const auto version = r.u16();
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version));
  }
  const auto dtype = r.u16();
  if (dtype != kDtypeF64) throw FormatError("unsupported dtype tag " + std::to_string(dtype));
  const auto count = r.u32();
  r.u64();

  TensorContainer c;
  for (std::uint32_t s = 0; s < count; ++s) {
    const auto name_len = r.u32();
    std::string name = r.str(name_len);
    const auto rank = r.u32();
    if (rank > r.remaining() / 8) throw FormatError("section rank runs past the payload");
    Tensor t;
    t.dims.resize(rank);
    std::uint64_t elems = 1;
    for (auto& d : t.dims) {
      d = r.u64();
      if (d != 0 && elems > std::numeric_limits<std::uint64_t>::max() / d) {
        throw FormatError("section dims overflow");
      }
      elems *= d;
    }
    if (elems > r.remaining() / 8) throw FormatError("section payload runs past the end");
    t.values.resize(elems);
    for (auto& v : t.values) v = r.f64();
    if (c.contains(name)) throw FormatError("duplicate section '" + name + "'");
    c.sections_.emplace_back(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last section");
  return c;
}

void TensorContainer::write_file(const std::filesystem::path& path) const {
  write_bytes(path, encode());
}

TensorContainer TensorContainer::read_file(const std::filesystem::path& path) {
  return decode(read_bytes(path));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("short write to '" + path.string() + "'");
}

}  // namespace taylormlp
