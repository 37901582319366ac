#pragma once

// Line-oriented helpers shared by the text file formats.

#include "stto/error.hpp"

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace stto::detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
        if (!in_) {
            throw IoError("cannot open " + path.string() + " for reading");
        }
    }

    /// Next line; throws FormatError at end of file.
    std::string next(std::string_view what) {
        std::string line;
        if (!std::getline(in_, line)) {
            fail(line_no_ + 1, "unexpected end of file, expected " + std::string(what));
        }
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    /// True when only whitespace remains.
    bool at_end() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] std::size_t line_no() const noexcept { return line_no_; }

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw FormatError(path_.string() + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { fail(line_no_, msg); }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_size(std::string_view tok, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline bool parse_double(std::string_view tok, double& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

/// Parses a line holding exactly `count` positive integers (any count when count == 0).
inline std::vector<std::size_t> parse_sizes(LineReader& r, const std::string& line,
                                            std::size_t count, std::string_view what) {
    auto toks = split_ws(line);
    if (count != 0 && toks.size() != count) {
        r.fail("expected " + std::to_string(count) + " " + std::string(what) + ", found " +
               std::to_string(toks.size()));
    }
    std::vector<std::size_t> out(toks.size());
    for (std::size_t k = 0; k < toks.size(); ++k) {
        if (!parse_size(toks[k], out[k]) || out[k] == 0) {
            r.fail("invalid " + std::string(what) + " '" + std::string(toks[k]) + "'");
        }
    }
    return out;
}

inline std::size_t parse_single_size(LineReader& r, const std::string& line, std::string_view what) {
    auto toks = split_ws(line);
    std::size_t v = 0;
    if (toks.size() != 1 || !parse_size(toks[0], v)) {
        r.fail("invalid " + std::string(what) + " '" + line + "'");
    }
    return v;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write to " + path.string() + " failed");
    }
}

}  // namespace stto::detail
