#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace neuroage {

// Simulation time is integer nanoseconds so that event ordering and
// tie-breaking are exact and platform-independent.
using SimTime = std::int64_t;

inline constexpr SimTime kNsPerSecond = 1'000'000'000;

using TileId = std::uint32_t;
using NeuronId = std::uint32_t;

// Thrown on malformed input files; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Illegal state transition (time regression, double-booked de-stress, ...).
class StateError : public std::logic_error {
    using std::logic_error::logic_error;
};

// A numeric solver failed to converge; carries bracket diagnostics.
class ConvergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double ns_to_seconds(SimTime t) { return static_cast<double>(t) / kNsPerSecond; }

inline SimTime seconds_to_ns(double s) {
    if (!std::isfinite(s)) throw std::domain_error("time must be finite");
    return static_cast<SimTime>(std::llround(s * kNsPerSecond));
}

// Formats nanoseconds as decimal seconds with exactly nine fractional
// digits. Pure integer arithmetic, so emission is byte-stable.
inline std::string format_seconds(SimTime t) {
    const bool neg = t < 0;
    const std::uint64_t abs = neg ? static_cast<std::uint64_t>(-(t + 1)) + 1
                                  : static_cast<std::uint64_t>(t);
    const std::uint64_t whole = abs / kNsPerSecond;
    const std::uint64_t frac = abs % kNsPerSecond;
    std::string out = neg ? "-" : "";
    out += std::to_string(whole);
    out += '.';
    std::string f = std::to_string(frac);
    out.append(9 - f.size(), '0');
    out += f;
    return out;
}

// Parses decimal seconds to nanoseconds exactly. Accepts [-]digits[.digits]
// with at most nine fractional digits; anything finer than 1 ns is rejected.
inline SimTime parse_seconds(std::string_view text, std::size_t line = 0) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        neg = text[i] == '-';
        ++i;
    }
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
        throw ParseError("expected a decimal time value, got '" + std::string(text) + "'", line);

    std::uint64_t whole = 0;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        whole = whole * 10 + static_cast<std::uint64_t>(text[i] - '0');
        if (whole > static_cast<std::uint64_t>(std::numeric_limits<SimTime>::max() / kNsPerSecond))
            throw ParseError("time value out of range: '" + std::string(text) + "'", line);
    }

    std::uint64_t frac = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        std::size_t digits = 0;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i, ++digits) {
            if (digits >= 9) {
                if (text[i] != '0')
                    throw ParseError("sub-nanosecond precision not representable: '" +
                                         std::string(text) + "'",
                                     line);
                continue;
            }
            frac = frac * 10 + static_cast<std::uint64_t>(text[i] - '0');
        }
        while (digits < 9) {
            frac *= 10;
            ++digits;
        }
    }
    if (i != text.size())
        throw ParseError("trailing characters in time value: '" + std::string(text) + "'", line);

    const std::uint64_t ns = whole * kNsPerSecond + frac;
    if (ns > static_cast<std::uint64_t>(std::numeric_limits<SimTime>::max()))
        throw ParseError("time value out of range: '" + std::string(text) + "'", line);
    return neg ? -static_cast<SimTime>(ns) : static_cast<SimTime>(ns);
}

// RFC 4180 field quoting; only quotes when the field needs it.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// FNV-1a, used to fingerprint configs and traces in report headers.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace neuroage
