#pragma once

// Little-endian length-prefixed encoding shared by checkpoints and corpora.
// Files end with a CRC-32 of every preceding byte.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include <boost/crc.hpp>

#include "vsrn/errors.hpp"

namespace vsrn::io {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }

  void raw(std::string_view s) { buf_.append(s); }

  // Appends the CRC-32 of everything written so far.
  void seal() {
    boost::crc_32_type crc;
    crc.process_bytes(buf_.data(), buf_.size());
    u32(crc.checksum());
  }

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }

  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw CorruptionError("unexpected end of data");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

// Verifies the trailing CRC-32 and returns the payload without it.
inline std::string_view checked_payload(std::string_view file) {
  if (file.size() < 4) throw CorruptionError("file too short for checksum");
  const auto payload = file.substr(0, file.size() - 4);
  ByteReader tail(file.substr(file.size() - 4));
  const std::uint32_t stored = tail.u32();
  boost::crc_32_type crc;
  crc.process_bytes(payload.data(), payload.size());
  if (crc.checksum() != stored) throw CorruptionError("checksum mismatch");
  return payload;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace vsrn::io
