#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/geometry.hpp"

namespace capacore {

using Bytes = std::vector<std::uint8_t>;

// Little-endian fixed-width encoding.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void point(const Point& p) {
    for (auto x : p.coords) i64(x);
    u8(p.tag ? 1 : 0);
    if (p.tag) u64(*p.tag);
  }
  void cell(const CellId& c) {
    i32(c.level);
    for (auto t : c.lattice) i64(t);
  }

  Bytes take() { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  void put(std::uint64_t v, int n) {
    for (int b = 0; b < n; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::size_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect(const char* magic, std::size_t n) {
    need(n);
    if (std::memcmp(in_.data() + pos_, magic, n) != 0) throw UsageError("bad blob magic");
    pos_ += n;
  }
  Point point(int d) {
    Point p;
    p.coords.resize(d);
    for (auto& x : p.coords) x = i64();
    if (u8()) p.tag = u64();
    return p;
  }
  CellId cell(int d) {
    CellId c;
    c.level = i32();
    c.lattice.resize(d);
    for (auto& t : c.lattice) t = i64();
    return c;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw UsageError("truncated blob");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<std::uint64_t>(in_[pos_ + b]) << (8 * b);
    pos_ += n;
    return v;
  }
  const Bytes& in_;
  std::size_t pos_ = 0;
};

}  // namespace capacore
