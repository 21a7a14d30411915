#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ite::dns {

inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kTypeAaaa = 28;
inline constexpr std::uint16_t kClassIn = 1;

inline constexpr std::uint8_t kRcodeNoError = 0;
inline constexpr std::uint8_t kRcodeNxDomain = 3;
inline constexpr std::uint8_t kRcodeRefused = 5;

inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxNameLength = 255;
inline constexpr std::size_t kMaxLabelLength = 63;

struct DnsQuery {
  std::uint16_t id = 0;
  std::string qname;  // dotted, no trailing dot, case preserved
  std::uint16_t qtype = kTypeA;
  std::uint16_t qclass = kClassIn;
  bool rd = false;
};

enum class ParseStatus : std::uint8_t {
  ok,
  malformed,  // drop silently, count
  refused,    // well-formed header we refuse to serve (multi-question)
};

struct ParseResult {
  ParseStatus status = ParseStatus::malformed;
  DnsQuery query;  // id valid for refused; fully populated for ok
};

inline char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

inline bool qname_equal_ci(std::string_view a, std::string_view b) {
  if (!a.empty() && a.back() == '.') a.remove_suffix(1);
  if (!b.empty() && b.back() == '.') b.remove_suffix(1);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  }
  return true;
}

namespace wire_detail {

// Bounds-checked cursor; every read is explicit so the parser can never
// step outside the datagram.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool remaining(std::size_t n) const { return pos_ + n <= data_.size(); }

  bool u8(std::uint8_t& out) {
    if (!remaining(1)) return false;
    out = data_[pos_++];
    return true;
  }

  bool u16(std::uint16_t& out) {
    if (!remaining(2)) return false;
    out = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return true;
  }

  bool bytes(std::size_t n, std::span<const std::uint8_t>& out) {
    if (!remaining(n)) return false;
    out = data_.subspan(pos_, n);
    pos_ += n;
    return true;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Reads a possibly-compressed name starting at the reader position and
// leaves the reader just past it. Compression pointers must point strictly
// backwards, which also bounds the walk.
inline bool read_name(Reader& r, std::string& out) {
  out.clear();
  std::size_t name_len = 0;
  bool jumped = false;
  std::size_t resume = 0;
  std::size_t min_pointer_target = r.pos();
  while (true) {
    std::uint8_t len = 0;
    if (!r.u8(len)) return false;
    if ((len & 0xC0) == 0xC0) {
      std::uint8_t low = 0;
      if (!r.u8(low)) return false;
      const std::size_t target = static_cast<std::size_t>(len & 0x3F) << 8 | low;
      if (target >= min_pointer_target) return false;  // must point backwards
      if (!jumped) {
        jumped = true;
        resume = r.pos();
      }
      min_pointer_target = target;
      r.seek(target);
      continue;
    }
    if ((len & 0xC0) != 0) return false;  // 0x40/0x80 label types unsupported
    if (len == 0) break;
    if (len > kMaxLabelLength) return false;
    name_len += len + 1;
    if (name_len > kMaxNameLength) return false;
    std::span<const std::uint8_t> label;
    if (!r.bytes(len, label)) return false;
    if (!out.empty()) out.push_back('.');
    out.append(reinterpret_cast<const char*>(label.data()), label.size());
  }
  if (jumped) r.seek(resume);
  return true;
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline void put_name(std::vector<std::uint8_t>& out, std::string_view name) {
  if (!name.empty() && name.back() == '.') name.remove_suffix(1);
  std::size_t total = 0;
  while (!name.empty()) {
    const std::size_t dot = name.find('.');
    const std::string_view label = name.substr(0, dot);
    if (label.empty() || label.size() > kMaxLabelLength) {
      throw std::invalid_argument("dns: bad label in name");
    }
    total += label.size() + 1;
    if (total > kMaxNameLength) throw std::invalid_argument("dns: name too long");
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
    if (dot == std::string_view::npos) break;
    name.remove_prefix(dot + 1);
  }
  out.push_back(0);
}

struct HeaderFlags {
  bool qr = false;
  std::uint8_t opcode = 0;
  bool aa = false;
  bool tc = false;
  bool rd = false;
  bool ra = false;
  std::uint8_t rcode = 0;

  std::uint16_t pack() const {
    return static_cast<std::uint16_t>((qr ? 0x8000 : 0) | (opcode & 0xF) << 11 |
                                      (aa ? 0x0400 : 0) | (tc ? 0x0200 : 0) |
                                      (rd ? 0x0100 : 0) | (ra ? 0x0080 : 0) | (rcode & 0xF));
  }
};

inline void put_header(std::vector<std::uint8_t>& out, std::uint16_t id, HeaderFlags flags,
                       std::uint16_t qd, std::uint16_t an, std::uint16_t ns, std::uint16_t ar) {
  put_u16(out, id);
  put_u16(out, flags.pack());
  put_u16(out, qd);
  put_u16(out, an);
  put_u16(out, ns);
  put_u16(out, ar);
}

}  // namespace wire_detail

// Parses one A-style question datagram. Header must be a standard query
// (QR=0, opcode 0) with exactly one question; additional sections, if any,
// are ignored rather than validated. Never reads out of bounds.
inline ParseResult parse_query(std::span<const std::uint8_t> datagram) {
  using namespace wire_detail;
  ParseResult res;
  if (datagram.size() < kHeaderSize) return res;
  Reader r(datagram);
  std::uint16_t id = 0, flags = 0, qdcount = 0, ancount = 0, nscount = 0, arcount = 0;
  r.u16(id);
  r.u16(flags);
  r.u16(qdcount);
  r.u16(ancount);
  r.u16(nscount);
  r.u16(arcount);
  res.query.id = id;
  if (flags & 0x8000) return res;                  // QR=1: not a query
  if (((flags >> 11) & 0xF) != 0) return res;      // opcode: standard query only
  if (qdcount == 0) return res;
  if (qdcount > 1) {
    res.status = ParseStatus::refused;
    return res;
  }
  std::string name;
  if (!read_name(r, name)) return res;
  std::uint16_t qtype = 0, qclass = 0;
  if (!r.u16(qtype) || !r.u16(qclass)) return res;
  res.status = ParseStatus::ok;
  res.query.qname = std::move(name);
  res.query.qtype = qtype;
  res.query.qclass = qclass;
  res.query.rd = (flags & 0x0100) != 0;
  return res;
}

inline std::vector<std::uint8_t> serialize_query(const DnsQuery& q) {
  using namespace wire_detail;
  std::vector<std::uint8_t> out;
  HeaderFlags flags;
  flags.rd = q.rd;
  put_header(out, q.id, flags, 1, 0, 0, 0);
  put_name(out, q.qname);
  put_u16(out, q.qtype);
  put_u16(out, q.qclass);
  return out;
}

namespace wire_detail {

inline std::vector<std::uint8_t> response_shell(const DnsQuery& q, std::uint8_t rcode,
                                                std::uint16_t ancount) {
  std::vector<std::uint8_t> out;
  HeaderFlags flags;
  flags.qr = true;
  flags.aa = true;
  flags.rd = q.rd;
  flags.ra = false;  // non-recursive
  flags.rcode = rcode;
  put_header(out, q.id, flags, 1, ancount, 0, 0);
  put_name(out, q.qname);
  put_u16(out, q.qtype);
  put_u16(out, q.qclass);
  return out;
}

}  // namespace wire_detail

// Authoritative answer: echoes the question and appends one A record with
// the given address and TTL, name compressed to the question (0xC00C).
// A single A answer always fits well inside 512 bytes.
inline std::vector<std::uint8_t> build_response(const DnsQuery& q, std::uint32_t ipv4,
                                                std::uint32_t ttl_s) {
  using namespace wire_detail;
  std::vector<std::uint8_t> out = response_shell(q, kRcodeNoError, 1);
  put_u16(out, 0xC000 | kHeaderSize);  // pointer to the question name
  put_u16(out, kTypeA);
  put_u16(out, kClassIn);
  put_u32(out, ttl_s);
  put_u16(out, 4);
  put_u32(out, ipv4);
  if (out.size() > 512) throw std::logic_error("dns: response exceeds 512 bytes");
  return out;
}

inline std::vector<std::uint8_t> build_nxdomain(const DnsQuery& q) {
  return wire_detail::response_shell(q, kRcodeNxDomain, 0);
}

inline std::vector<std::uint8_t> build_noerror_empty(const DnsQuery& q) {
  return wire_detail::response_shell(q, kRcodeNoError, 0);
}

inline std::vector<std::uint8_t> build_refused(std::uint16_t id) {
  using namespace wire_detail;
  std::vector<std::uint8_t> out;
  HeaderFlags flags;
  flags.qr = true;
  flags.rcode = kRcodeRefused;
  put_header(out, id, flags, 0, 0, 0, 0);
  return out;
}

}  // namespace ite::dns
