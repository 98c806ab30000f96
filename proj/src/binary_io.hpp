#pragma once

// Little-endian float64 payload helpers shared by the motion and checkpoint
// containers.

#include "choreo/errors.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace choreo::detail {

inline void write_f64(std::ostream& os, const double* data, std::size_t n) {
    std::vector<char> buf(n * 8);
    for (std::size_t i = 0; i < n; ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(data[i]);
        for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void read_f64(std::istream& is, double* data, std::size_t n) {
    std::vector<char> buf(n * 8);
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size()) throw FormatError("payload truncated");
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i * 8 + b])) << (8 * b);
        data[i] = std::bit_cast<double>(bits);
    }
}

inline void expect_eof(std::istream& is) {
    is.peek();
    if (!is.eof()) throw FormatError("trailing bytes after payload");
}

/// Reads one header line split into whitespace-separated tokens.
inline std::vector<std::string> header_line(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("header truncated");
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    return tok;
}

inline long parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw FormatError(std::string("bad integer for ") + what);
        return v;
    } catch (const std::logic_error&) {
        throw FormatError(std::string("bad integer for ") + what);
    }
}

inline double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw FormatError(std::string("bad number for ") + what);
        return v;
    } catch (const std::logic_error&) {
        throw FormatError(std::string("bad number for ") + what);
    }
}

}  // namespace choreo::detail
