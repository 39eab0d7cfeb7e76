#include "pguard/prefix.hpp"

#include <cstdio>

namespace pguard {

namespace {

std::uint32_t mask_for(int length) {
    if (length <= 0) return 0;
    if (length >= 32) return 0xffffffffu;
    return 0xffffffffu << (32 - length);
}

// Parses a decimal field of at most `max_digits` digits. Leading zeros are
// rejected ("010" is ambiguous with octal notation).
bool parse_decimal(std::string_view text, size_t& pos, int max_digits, long& out) {
    size_t start = pos;
    long value = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        value = value * 10 + (text[pos] - '0');
        ++pos;
        if (static_cast<int>(pos - start) > max_digits) return false;
    }
    if (pos == start) return false;
    if (pos - start > 1 && text[start] == '0') return false;
    out = value;
    return true;
}

}  // namespace

IpPrefix IpPrefix::make(std::uint32_t address, int length) {
    if (length < 0 || length > 32)
        throw LengthOutOfRange("prefix length " + std::to_string(length) + " out of [0, 32]");
    IpPrefix p{address, static_cast<std::uint8_t>(length)};
    if ((address & ~mask_for(length)) != 0)
        throw NonCanonical(render_address(address) + "/" + std::to_string(length) +
                           " has host bits set");
    return p;
}

std::uint32_t IpPrefix::netmask() const { return mask_for(length); }

bool IpPrefix::contains(const IpPrefix& other) const {
    if (length > other.length) return false;
    return (other.address & netmask()) == address;
}

bool IpPrefix::contains_address(std::uint32_t addr) const {
    return (addr & netmask()) == address;
}

std::string IpPrefix::str() const {
    return render_address(address) + "/" + std::to_string(length);
}

std::uint32_t parse_ipv4(std::string_view text) {
    size_t pos = 0;
    std::uint32_t addr = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (pos >= text.size() || text[pos] != '.')
                throw MalformedPrefix("bad IPv4 address '" + std::string(text) + "'");
            ++pos;
        }
        long value = 0;
        if (!parse_decimal(text, pos, 3, value) || value > 255)
            throw MalformedPrefix("bad IPv4 address '" + std::string(text) + "'");
        addr = (addr << 8) | static_cast<std::uint32_t>(value);
    }
    if (pos != text.size())
        throw MalformedPrefix("bad IPv4 address '" + std::string(text) + "'");
    return addr;
}

IpPrefix parse_prefix(std::string_view text) {
    size_t slash = text.find('/');
    if (slash == std::string_view::npos)
        throw MalformedPrefix("missing '/' in prefix '" + std::string(text) + "'");
    std::uint32_t addr = parse_ipv4(text.substr(0, slash));
    std::string_view len_text = text.substr(slash + 1);
    size_t pos = 0;
    long length = 0;
    if (!parse_decimal(len_text, pos, 2, length) || pos != len_text.size())
        throw MalformedPrefix("bad prefix length in '" + std::string(text) + "'");
    if (length > 32)
        throw LengthOutOfRange("prefix length " + std::to_string(length) + " out of [0, 32]");
    return IpPrefix::make(addr, static_cast<int>(length));
}

std::string render_address(std::uint32_t address) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (address >> 24) & 0xff,
                  (address >> 16) & 0xff, (address >> 8) & 0xff, address & 0xff);
    return buf;
}

bool contains(const IpPrefix& parent, const IpPrefix& child) {
    return parent.contains(child);
}

std::pair<IpPrefix, IpPrefix> deaggregate(const IpPrefix& parent, int max_length) {
    if (max_length > 32) max_length = 32;
    if (parent.length >= max_length)
        throw Unsplittable(parent.str() + " cannot be split under max length /" +
                           std::to_string(max_length));
    int child_length = parent.length + 1;
    std::uint32_t high_bit = 1u << (32 - child_length);
    IpPrefix low{parent.address, static_cast<std::uint8_t>(child_length)};
    IpPrefix high{parent.address | high_bit, static_cast<std::uint8_t>(child_length)};
    return {low, high};
}

}  // namespace pguard
