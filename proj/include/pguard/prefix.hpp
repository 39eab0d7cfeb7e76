#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pguard/errors.hpp"

namespace pguard {

// Autonomous system number. 32-bit; 0 is reserved and rejected wherever an
// origin is required (config load, command parsing).
using Asn = std::uint32_t;

// AS path as carried in an announcement: front() is the announcing neighbor,
// back() is the origin AS.
using AsPath = std::vector<Asn>;

inline Asn path_origin(const AsPath& path) { return path.empty() ? 0 : path.back(); }

// Longest prefix announcable without risking ISP filters on more-specifics.
constexpr int kDefaultMaxLength = 24;

// IPv4 prefix in canonical form: every bit below `length` is zero.
// Values are immutable once constructed and safe to share between threads.
struct IpPrefix {
    std::uint32_t address = 0;  // host byte order
    std::uint8_t length = 0;    // 0..32

    // Validating constructor; throws LengthOutOfRange / NonCanonical.
    static IpPrefix make(std::uint32_t address, int length);

    std::uint32_t netmask() const;
    // Number of addresses covered (2^(32-length)).
    std::uint64_t size() const { return std::uint64_t{1} << (32 - length); }
    // One past the last covered address, as a 64-bit value so /0 works.
    std::uint64_t end() const { return std::uint64_t{address} + size(); }

    bool contains(const IpPrefix& other) const;
    bool contains_address(std::uint32_t addr) const;

    std::string str() const;

    friend auto operator<=>(const IpPrefix&, const IpPrefix&) = default;
};

// Parses "a.b.c.d/len". Rejects non-canonical inputs instead of masking them.
// Throws MalformedPrefix (syntax), LengthOutOfRange (len > 32),
// NonCanonical (host bits set).
IpPrefix parse_prefix(std::string_view text);

// Parses a bare dotted-quad address.
std::uint32_t parse_ipv4(std::string_view text);

std::string render_address(std::uint32_t address);
inline std::string render_prefix(const IpPrefix& p) { return p.str(); }

// True iff parent covers child (parent.length <= child.length and the
// first parent.length bits agree). Reflexive.
bool contains(const IpPrefix& parent, const IpPrefix& child);

// Splits a prefix into its two immediate children (length + 1): low half
// first. Throws Unsplittable when parent.length >= max_length, i.e. when
// de-aggregation cannot produce announcable more-specifics.
std::pair<IpPrefix, IpPrefix> deaggregate(const IpPrefix& parent,
                                          int max_length = kDefaultMaxLength);

}  // namespace pguard
