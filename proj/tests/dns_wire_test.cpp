#include "itelab/dns_wire.hpp"

#include <gtest/gtest.h>

#include <optional>
#include <vector>

#include "itelab/rng.hpp"

namespace ite::dns {
namespace {

using Bytes = std::vector<std::uint8_t>;

// Hand-assembled minimal A query for `a.b.` (RFC 1035 wire layout):
// 12-byte header + QNAME (1 'a' 1 'b' 0) + QTYPE + QCLASS = 21 bytes.
Bytes golden_query_ab() {
  return {0xAB, 0xCD,              // id
          0x01, 0x00,              // flags: RD
          0x00, 0x01,              // qdcount
          0x00, 0x00, 0x00, 0x00,  // ancount, nscount
          0x00, 0x00,              // arcount
          0x01, 'a', 0x01, 'b', 0x00,
          0x00, 0x01,              // qtype A
          0x00, 0x01};             // qclass IN
}

TEST(ParseQuery, GoldenMinimalQuery) {
  const Bytes wire = golden_query_ab();
  ASSERT_EQ(wire.size(), 21u);
  const ParseResult res = parse_query(wire);
  ASSERT_EQ(res.status, ParseStatus::ok);
  EXPECT_EQ(res.query.id, 0xABCD);
  EXPECT_EQ(res.query.qname, "a.b");
  EXPECT_EQ(res.query.qtype, kTypeA);
  EXPECT_EQ(res.query.qclass, kClassIn);
  EXPECT_TRUE(res.query.rd);
}

TEST(ParseQuery, BelowHeaderSizeIsMalformed) {
  const Bytes wire(11, 0);
  EXPECT_EQ(parse_query(wire).status, ParseStatus::malformed);
  EXPECT_EQ(parse_query({}).status, ParseStatus::malformed);
}

TEST(ParseQuery, SerializeParseRoundTripsGeneratedCorpus) {
  Rng rng(61);
  const char* alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-";
  for (int i = 0; i < 2000; ++i) {
    DnsQuery q;
    q.id = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
    const int labels = static_cast<int>(rng.uniform_int(1, 5));
    for (int l = 0; l < labels; ++l) {
      if (l > 0) q.qname.push_back('.');
      const int len = static_cast<int>(rng.uniform_int(1, 20));
      for (int c = 0; c < len; ++c) {
        q.qname.push_back(alphabet[rng.uniform_int(0, 62)]);
      }
    }
    q.qtype = static_cast<std::uint16_t>(rng.uniform_int(1, 300));
    q.qclass = kClassIn;
    q.rd = rng.uniform01() < 0.5;

    const Bytes wire = serialize_query(q);
    const ParseResult back = parse_query(wire);
    ASSERT_EQ(back.status, ParseStatus::ok);
    EXPECT_EQ(back.query.id, q.id);
    EXPECT_EQ(back.query.qname, q.qname);
    EXPECT_EQ(back.query.qtype, q.qtype);
    EXPECT_EQ(back.query.qclass, q.qclass);
    EXPECT_EQ(back.query.rd, q.rd);
    EXPECT_EQ(serialize_query(back.query), wire);
  }
}

TEST(ParseQuery, RejectsResponsesAndNonQueryOpcodes) {
  Bytes wire = golden_query_ab();
  wire[2] = 0x81;  // QR=1
  EXPECT_EQ(parse_query(wire).status, ParseStatus::malformed);
  wire = golden_query_ab();
  wire[2] = 0x29;  // opcode 5
  EXPECT_EQ(parse_query(wire).status, ParseStatus::malformed);
}

TEST(ParseQuery, MultiQuestionIsRefusedWithIdPreserved) {
  Bytes wire = golden_query_ab();
  wire[5] = 2;  // qdcount = 2
  const ParseResult res = parse_query(wire);
  EXPECT_EQ(res.status, ParseStatus::refused);
  EXPECT_EQ(res.query.id, 0xABCD);
}

TEST(ParseQuery, ZeroQuestionsIsMalformed) {
  Bytes wire = golden_query_ab();
  wire[5] = 0;
  EXPECT_EQ(parse_query(wire).status, ParseStatus::malformed);
}

TEST(ParseQuery, TruncatedQuestionIsMalformed) {
  const Bytes wire = golden_query_ab();
  for (std::size_t cut = 12; cut < wire.size(); ++cut) {
    const ParseResult res = parse_query(std::span(wire.data(), cut));
    EXPECT_EQ(res.status, ParseStatus::malformed) << "cut at " << cut;
  }
}

TEST(ParseQuery, DecompressesBackwardPointers) {
  // Pointer target inside the header: id bytes spell a 1-byte label "a"
  // terminated by the zero flags byte. Unusual, but exercises the
  // decompression path a hostile or odd datagram can hit.
  const Bytes wire = {0x01, 'a',               // id doubles as wire for label "a"
                      0x00, 0x00,              // flags 0 terminates the name at target 0
                      0x00, 0x01,              // qdcount
                      0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                      0xC0, 0x00,              // QNAME: pointer to offset 0
                      0x00, 0x01, 0x00, 0x01};
  const ParseResult res = parse_query(wire);
  ASSERT_EQ(res.status, ParseStatus::ok);
  EXPECT_EQ(res.query.qname, "a");
}

TEST(ParseQuery, RejectsPointerLoopsAndForwardPointers) {
  Bytes self = golden_query_ab();
  self.resize(12);
  self.insert(self.end(), {0xC0, 0x0C, 0x00, 0x01, 0x00, 0x01});  // points at itself
  EXPECT_EQ(parse_query(self).status, ParseStatus::malformed);

  Bytes fwd = golden_query_ab();
  fwd.resize(12);
  fwd.insert(fwd.end(), {0xC0, 0x10, 0x00, 0x01, 0x00, 0x01});  // points forward
  EXPECT_EQ(parse_query(fwd).status, ParseStatus::malformed);
}

TEST(ParseQuery, RejectsOverlongNames) {
  Bytes wire = {0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  for (int i = 0; i < 10; ++i) {
    wire.push_back(63);
    for (int c = 0; c < 63; ++c) wire.push_back('x');
  }
  wire.push_back(0);
  wire.insert(wire.end(), {0x00, 0x01, 0x00, 0x01});
  EXPECT_EQ(parse_query(wire).status, ParseStatus::malformed);
}

// Independent response decoder used as the test-side oracle.
struct DecodedResponse {
  std::uint16_t id, flags, qdcount, ancount;
  std::string qname;
  std::uint16_t qtype, qclass;
  std::optional<std::uint32_t> a_rdata;
  std::optional<std::uint32_t> a_ttl;
};

DecodedResponse decode_response(const Bytes& wire) {
  DecodedResponse d{};
  auto u16 = [&wire](std::size_t off) {
    return static_cast<std::uint16_t>(wire.at(off) << 8 | wire.at(off + 1));
  };
  auto u32 = [&wire](std::size_t off) {
    return static_cast<std::uint32_t>(wire.at(off)) << 24 |
           static_cast<std::uint32_t>(wire.at(off + 1)) << 16 |
           static_cast<std::uint32_t>(wire.at(off + 2)) << 8 | wire.at(off + 3);
  };
  d.id = u16(0);
  d.flags = u16(2);
  d.qdcount = u16(4);
  d.ancount = u16(6);
  std::size_t pos = 12;
  while (true) {
    const std::uint8_t len = wire.at(pos++);
    if (len == 0) break;
    if (!d.qname.empty()) d.qname.push_back('.');
    for (int i = 0; i < len; ++i) d.qname.push_back(static_cast<char>(wire.at(pos++)));
  }
  d.qtype = u16(pos);
  d.qclass = u16(pos + 2);
  pos += 4;
  if (d.ancount == 1) {
    EXPECT_EQ(u16(pos), 0xC00C);  // compressed name pointing at the question
    EXPECT_EQ(u16(pos + 2), kTypeA);
    EXPECT_EQ(u16(pos + 4), kClassIn);
    d.a_ttl = u32(pos + 6);
    EXPECT_EQ(u16(pos + 10), 4);
    d.a_rdata = u32(pos + 12);
    EXPECT_EQ(pos + 16, wire.size());
  } else {
    EXPECT_EQ(pos, wire.size());
  }
  return d;
}

TEST(BuildResponse, GoldenAnswerIsBitExact) {
  DnsQuery q;
  q.id = 0x1234;
  q.qname = "svc.itelab.test";
  q.qtype = kTypeA;
  q.qclass = kClassIn;
  q.rd = true;
  const Bytes got = build_response(q, 0xC0000201u, 15);  // 192.0.2.1
  const Bytes want = {
      0x12, 0x34,
      0x85, 0x00,  // QR|AA|RD, rcode 0
      0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,
      0x03, 's', 'v', 'c', 0x06, 'i', 't', 'e', 'l', 'a', 'b', 0x04, 't', 'e', 's', 't', 0x00,
      0x00, 0x01, 0x00, 0x01,
      0xC0, 0x0C,
      0x00, 0x01, 0x00, 0x01,
      0x00, 0x00, 0x00, 0x0F,
      0x00, 0x04,
      0xC0, 0x00, 0x02, 0x01,
  };
  EXPECT_EQ(got, want);
  EXPECT_LE(got.size(), 512u);
}

TEST(BuildResponse, EchoesQuestionSetsAaClearsRa) {
  Rng rng(67);
  for (int i = 0; i < 500; ++i) {
    DnsQuery q;
    q.id = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
    q.qname = "zone" + std::to_string(rng.uniform_int(0, 999)) + ".example";
    q.rd = rng.uniform01() < 0.5;
    const std::uint32_t addr = static_cast<std::uint32_t>(rng.next_u64());
    const std::uint32_t ttl = static_cast<std::uint32_t>(rng.uniform_int(1, 600));
    const DecodedResponse d = decode_response(build_response(q, addr, ttl));
    EXPECT_EQ(d.id, q.id);
    EXPECT_EQ(d.qname, q.qname);
    EXPECT_EQ(d.qdcount, 1);
    EXPECT_EQ(d.ancount, 1);
    EXPECT_TRUE(d.flags & 0x8000);   // QR
    EXPECT_TRUE(d.flags & 0x0400);   // AA
    EXPECT_FALSE(d.flags & 0x0080);  // RA clear: non-recursive
    EXPECT_EQ((d.flags & 0x0100) != 0, q.rd);
    EXPECT_EQ(d.flags & 0xF, kRcodeNoError);
    EXPECT_EQ(d.a_rdata, addr);
    EXPECT_EQ(d.a_ttl, ttl);
  }
}

TEST(BuildResponse, NxdomainAndEmptyForms) {
  DnsQuery q;
  q.id = 7;
  q.qname = "other.example";
  const DecodedResponse nx = decode_response(build_nxdomain(q));
  EXPECT_EQ(nx.flags & 0xF, kRcodeNxDomain);
  EXPECT_EQ(nx.ancount, 0);
  EXPECT_EQ(nx.qname, q.qname);

  q.qtype = kTypeAaaa;
  const DecodedResponse empty = decode_response(build_noerror_empty(q));
  EXPECT_EQ(empty.flags & 0xF, kRcodeNoError);
  EXPECT_EQ(empty.ancount, 0);
  EXPECT_EQ(empty.qtype, kTypeAaaa);

  const Bytes refused = build_refused(0x4242);
  EXPECT_EQ(refused.size(), 12u);
  EXPECT_EQ(refused[0], 0x42);
  EXPECT_EQ((refused[3] & 0xF), kRcodeRefused);
}

TEST(QnameCompare, CaseInsensitiveAndDotTolerant) {
  EXPECT_TRUE(qname_equal_ci("SVC.Itelab.Test", "svc.itelab.test"));
  EXPECT_TRUE(qname_equal_ci("a.b.", "A.B"));
  EXPECT_FALSE(qname_equal_ci("a.b", "a.c"));
  EXPECT_FALSE(qname_equal_ci("a.b", "a.b.c"));
}

TEST(ParseQuery, FuzzRandomAndMutatedDatagrams) {
  Rng rng(71);
  const Bytes seedq = golden_query_ab();
  int ok = 0;
  for (int i = 0; i < 100'000; ++i) {
    Bytes wire;
    if (rng.uniform01() < 0.5) {
      const std::size_t len = static_cast<std::size_t>(rng.uniform_int(0, 64));
      wire.resize(len);
      for (auto& b : wire) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    } else {
      wire = seedq;
      const int flips = static_cast<int>(rng.uniform_int(1, 6));
      for (int f = 0; f < flips; ++f) {
        const std::size_t pos = static_cast<std::size_t>(rng.uniform_int(0, 20));
        wire[pos] ^= static_cast<std::uint8_t>(1u << rng.uniform_int(0, 7));
      }
      if (rng.uniform01() < 0.3) {
        wire.resize(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(wire.size()))));
      }
    }
    const ParseResult res = parse_query(wire);
    ok += res.status == ParseStatus::ok;
    if (res.status == ParseStatus::ok) {
      EXPECT_LE(res.query.qname.size(), kMaxNameLength);
    }
  }
  EXPECT_GT(ok, 0);  // mutation corpus keeps some queries valid
}

}  // namespace
}  // namespace ite::dns
