// Ethernet II frames and the ARP / ICMP-echo payloads carried on the
// simulated wire. Every multi-byte field is big-endian on the wire.
#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arpsim {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint16_t kEtherTypeArp = 0x0806;
inline constexpr std::size_t kEthHeaderLen = 14;
inline constexpr std::size_t kMaxPayloadLen = 1500;
inline constexpr std::size_t kArpPayloadLen = 28;
inline constexpr std::size_t kIcmpPayloadLen = 28;  // IPv4 header (20) + echo header (8)

class AddressParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CodecError : public std::runtime_error {
 public:
  enum class Kind { oversize_payload, truncated_frame, malformed_arp, malformed_icmp };

  CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t off) {
  return static_cast<std::uint16_t>((in[off] << 8) | in[off + 1]);
}

}  // namespace detail

/// 48-bit IEEE MAC address. Textual form: six lowercase hex pairs joined by ':'.
class MacAddr {
 public:
  constexpr MacAddr() = default;
  constexpr explicit MacAddr(std::array<std::uint8_t, 6> octets) : octets_(octets) {}

  static constexpr MacAddr broadcast() { return MacAddr({0xff, 0xff, 0xff, 0xff, 0xff, 0xff}); }
  static constexpr MacAddr zero() { return MacAddr(); }

  /// Accepts "aa:bb:cc:dd:ee:ff", "aa-bb-..." and the Cisco dotted form "aabb.ccdd.eeff".
  static MacAddr parse(std::string_view text) {
    std::string hex;
    for (char c : text) {
      if (c == ':' || c == '-' || c == '.') continue;
      if (detail::hex_value(c) < 0) throw AddressParseError("malformed MAC address '" + std::string(text) + "'");
      hex.push_back(c);
    }
    bool separators_ok = false;
    if (text.size() == 17) {
      separators_ok = true;
      for (std::size_t i = 2; i < 17; i += 3) separators_ok &= (text[i] == ':' || text[i] == '-');
    } else if (text.size() == 14) {
      separators_ok = text[4] == '.' && text[9] == '.';
    }
    if (hex.size() != 12 || !separators_ok) {
      throw AddressParseError("malformed MAC address '" + std::string(text) + "'");
    }
    MacAddr m;
    for (std::size_t i = 0; i < 6; ++i) {
      m.octets_[i] = static_cast<std::uint8_t>(detail::hex_value(hex[2 * i]) * 16 + detail::hex_value(hex[2 * i + 1]));
    }
    return m;
  }

  std::string to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets_[0], octets_[1], octets_[2], octets_[3],
                  octets_[4], octets_[5]);
    return buf;
  }

  /// Cisco IOS notation, e.g. "000e.7f5f.ba40".
  std::string to_cisco() const {
    char buf[15];
    std::snprintf(buf, sizeof buf, "%02x%02x.%02x%02x.%02x%02x", octets_[0], octets_[1], octets_[2], octets_[3],
                  octets_[4], octets_[5]);
    return buf;
  }

  constexpr const std::array<std::uint8_t, 6>& octets() const { return octets_; }
  constexpr bool is_broadcast() const { return *this == broadcast(); }
  constexpr bool is_zero() const { return *this == zero(); }
  constexpr bool is_multicast() const { return (octets_[0] & 0x01) != 0; }

  constexpr auto operator<=>(const MacAddr&) const = default;

 private:
  std::array<std::uint8_t, 6> octets_{};
};

/// IPv4 address in dotted-quad form.
class Ipv4Addr {
 public:
  constexpr Ipv4Addr() = default;
  constexpr explicit Ipv4Addr(std::array<std::uint8_t, 4> octets) : octets_(octets) {}

  static constexpr Ipv4Addr from_u32(std::uint32_t v) {
    return Ipv4Addr({static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                     static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
  }

  static Ipv4Addr parse(std::string_view text) {
    Ipv4Addr a;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
      unsigned v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || next == p || next - p > 3 || v > 255) {
        throw AddressParseError("malformed IPv4 address '" + std::string(text) + "'");
      }
      a.octets_[i] = static_cast<std::uint8_t>(v);
      p = next;
      if (i < 3) {
        if (p == end || *p != '.') throw AddressParseError("malformed IPv4 address '" + std::string(text) + "'");
        ++p;
      }
    }
    if (p != end) throw AddressParseError("malformed IPv4 address '" + std::string(text) + "'");
    return a;
  }

  std::string to_string() const {
    return std::to_string(octets_[0]) + "." + std::to_string(octets_[1]) + "." + std::to_string(octets_[2]) + "." +
           std::to_string(octets_[3]);
  }

  constexpr std::uint32_t to_u32() const {
    return (std::uint32_t{octets_[0]} << 24) | (std::uint32_t{octets_[1]} << 16) | (std::uint32_t{octets_[2]} << 8) |
           std::uint32_t{octets_[3]};
  }

  constexpr const std::array<std::uint8_t, 4>& octets() const { return octets_; }
  constexpr bool is_unspecified() const { return to_u32() == 0; }

  constexpr auto operator<=>(const Ipv4Addr&) const = default;

 private:
  std::array<std::uint8_t, 4> octets_{};
};

struct EtherFrame {
  MacAddr dst;
  MacAddr src;
  std::uint16_t ethertype = 0;
  Bytes payload;

  bool operator==(const EtherFrame&) const = default;
};

enum class ArpOp : std::uint16_t { request = 1, reply = 2 };

struct ArpPacket {
  std::uint16_t hw_type = 1;
  std::uint16_t proto_type = kEtherTypeIpv4;
  std::uint8_t hw_size = 6;
  std::uint8_t proto_size = 4;
  ArpOp op = ArpOp::request;
  MacAddr sender_mac;
  Ipv4Addr sender_ip;
  MacAddr target_mac;
  Ipv4Addr target_ip;

  bool operator==(const ArpPacket&) const = default;
};

enum class EchoKind { request, reply };

/// Abstract ICMP echo. Checksums are carried as zero.
struct IcmpEcho {
  EchoKind kind = EchoKind::request;
  Ipv4Addr src_ip;
  Ipv4Addr dst_ip;
  std::uint16_t ident = 0;
  std::uint16_t seq = 0;

  bool operator==(const IcmpEcho&) const = default;
};

inline Bytes encode_frame(const EtherFrame& f) {
  if (f.payload.size() > kMaxPayloadLen) {
    throw CodecError(CodecError::Kind::oversize_payload,
                     "payload of " + std::to_string(f.payload.size()) + " bytes exceeds 1500");
  }
  Bytes out;
  out.reserve(kEthHeaderLen + f.payload.size());
  out.insert(out.end(), f.dst.octets().begin(), f.dst.octets().end());
  out.insert(out.end(), f.src.octets().begin(), f.src.octets().end());
  detail::put_u16(out, f.ethertype);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

inline EtherFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEthHeaderLen) {
    throw CodecError(CodecError::Kind::truncated_frame,
                     "frame of " + std::to_string(bytes.size()) + " bytes is shorter than the 14-byte header");
  }
  if (bytes.size() > kEthHeaderLen + kMaxPayloadLen) {
    throw CodecError(CodecError::Kind::oversize_payload, "frame exceeds 1514 bytes");
  }
  EtherFrame f;
  std::array<std::uint8_t, 6> mac{};
  std::copy_n(bytes.begin(), 6, mac.begin());
  f.dst = MacAddr(mac);
  std::copy_n(bytes.begin() + 6, 6, mac.begin());
  f.src = MacAddr(mac);
  f.ethertype = detail::get_u16(bytes, 12);
  f.payload.assign(bytes.begin() + kEthHeaderLen, bytes.end());
  return f;
}

namespace detail {

inline void validate_arp(std::uint8_t hw_size, std::uint8_t proto_size, std::uint16_t op) {
  if (hw_size != 6) throw CodecError(CodecError::Kind::malformed_arp, "ARP hw_size must be 6");
  if (proto_size != 4) throw CodecError(CodecError::Kind::malformed_arp, "ARP proto_size must be 4");
  if (op != 1 && op != 2) throw CodecError(CodecError::Kind::malformed_arp, "ARP opcode " + std::to_string(op));
}

}  // namespace detail

inline Bytes encode_arp(const ArpPacket& p) {
  detail::validate_arp(p.hw_size, p.proto_size, static_cast<std::uint16_t>(p.op));
  Bytes out;
  out.reserve(kArpPayloadLen);
  detail::put_u16(out, p.hw_type);
  detail::put_u16(out, p.proto_type);
  out.push_back(p.hw_size);
  out.push_back(p.proto_size);
  detail::put_u16(out, static_cast<std::uint16_t>(p.op));
  out.insert(out.end(), p.sender_mac.octets().begin(), p.sender_mac.octets().end());
  out.insert(out.end(), p.sender_ip.octets().begin(), p.sender_ip.octets().end());
  out.insert(out.end(), p.target_mac.octets().begin(), p.target_mac.octets().end());
  out.insert(out.end(), p.target_ip.octets().begin(), p.target_ip.octets().end());
  return out;
}

inline ArpPacket decode_arp(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kArpPayloadLen) {
    throw CodecError(CodecError::Kind::malformed_arp,
                     "ARP payload must be 28 bytes, got " + std::to_string(bytes.size()));
  }
  const std::uint16_t op = detail::get_u16(bytes, 6);
  detail::validate_arp(bytes[4], bytes[5], op);

  auto mac_at = [&](std::size_t off) {
    std::array<std::uint8_t, 6> m{};
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off), 6, m.begin());
    return MacAddr(m);
  };
  auto ip_at = [&](std::size_t off) {
    std::array<std::uint8_t, 4> a{};
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off), 4, a.begin());
    return Ipv4Addr(a);
  };

  ArpPacket p;
  p.hw_type = detail::get_u16(bytes, 0);
  p.proto_type = detail::get_u16(bytes, 2);
  p.hw_size = bytes[4];
  p.proto_size = bytes[5];
  p.op = static_cast<ArpOp>(op);
  p.sender_mac = mac_at(8);
  p.sender_ip = ip_at(14);
  p.target_mac = mac_at(18);
  p.target_ip = ip_at(24);
  return p;
}

// Minimal IPv4 header (no options, zero checksum) followed by the 8-byte echo header.
inline Bytes encode_icmp(const IcmpEcho& e) {
  Bytes out;
  out.reserve(kIcmpPayloadLen);
  out.push_back(0x45);
  out.push_back(0x00);
  detail::put_u16(out, static_cast<std::uint16_t>(kIcmpPayloadLen));
  detail::put_u16(out, 0);  // identification
  detail::put_u16(out, 0);  // flags / fragment offset
  out.push_back(64);        // ttl
  out.push_back(1);         // protocol: ICMP
  detail::put_u16(out, 0);
  out.insert(out.end(), e.src_ip.octets().begin(), e.src_ip.octets().end());
  out.insert(out.end(), e.dst_ip.octets().begin(), e.dst_ip.octets().end());
  out.push_back(e.kind == EchoKind::request ? 8 : 0);
  out.push_back(0);
  detail::put_u16(out, 0);
  detail::put_u16(out, e.ident);
  detail::put_u16(out, e.seq);
  return out;
}

inline IcmpEcho decode_icmp(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kIcmpPayloadLen) {
    throw CodecError(CodecError::Kind::malformed_icmp, "IPv4/ICMP payload too short");
  }
  if (bytes[0] != 0x45 || bytes[9] != 1) {
    throw CodecError(CodecError::Kind::malformed_icmp, "not an option-less IPv4 packet carrying ICMP");
  }
  const std::uint8_t type = bytes[20];
  if (type != 8 && type != 0) {
    throw CodecError(CodecError::Kind::malformed_icmp, "unsupported ICMP type " + std::to_string(type));
  }
  IcmpEcho e;
  e.kind = type == 8 ? EchoKind::request : EchoKind::reply;
  e.src_ip = Ipv4Addr({bytes[12], bytes[13], bytes[14], bytes[15]});
  e.dst_ip = Ipv4Addr({bytes[16], bytes[17], bytes[18], bytes[19]});
  e.ident = detail::get_u16(bytes, 24);
  e.seq = detail::get_u16(bytes, 26);
  return e;
}

inline EtherFrame make_arp_frame(MacAddr eth_dst, MacAddr eth_src, const ArpPacket& p) {
  return EtherFrame{eth_dst, eth_src, kEtherTypeArp, encode_arp(p)};
}

inline EtherFrame make_icmp_frame(MacAddr eth_dst, MacAddr eth_src, const IcmpEcho& e) {
  return EtherFrame{eth_dst, eth_src, kEtherTypeIpv4, encode_icmp(e)};
}

inline std::string to_string(ArpOp op) { return op == ArpOp::request ? "request" : "reply"; }
inline std::string to_string(EchoKind k) { return k == EchoKind::request ? "request" : "reply"; }

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

}  // namespace arpsim
