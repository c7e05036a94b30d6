#pragma once

// File I/O: CSV table emission, JSON manifests with content hashes,
// z-value readers. All output is deterministic: fixed number formatting,
// ordered JSON keys, LF line endings, no timestamps.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eb/errors.hpp"

namespace eb {

// --- SHA-1 content hashing (fingerprinting only, not security) ---

class Sha1 {
public:
    Sha1() { reset(); }

    void reset() {
        h_ = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
        buf_.clear();
        total_ = 0;
    }

    void update(const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        total_ += len;
        buf_.insert(buf_.end(), p, p + len);
        std::size_t off = 0;
        while (buf_.size() - off >= 64) {
            process(buf_.data() + off);
            off += 64;
        }
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(off));
    }

    std::string hex_digest() {
        std::vector<unsigned char> tail = buf_;
        std::uint64_t bits = total_ * 8;
        tail.push_back(0x80);
        while (tail.size() % 64 != 56) tail.push_back(0);
        for (int i = 7; i >= 0; --i) tail.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
        auto h = h_;
        for (std::size_t off = 0; off < tail.size(); off += 64) process_block(tail.data() + off, h);
        char out[41];
        for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[static_cast<std::size_t>(i)]);
        return std::string(out, 40);
    }

private:
    static std::uint32_t rol(std::uint32_t v, int n) { return (v << n) | (v >> (32 - n)); }

    void process(const unsigned char* block) { process_block(block, h_); }

    static void process_block(const unsigned char* block, std::array<std::uint32_t, 5>& h) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(block[4 * i]) << 24) | (std::uint32_t(block[4 * i + 1]) << 16) |
                   (std::uint32_t(block[4 * i + 2]) << 8) | std::uint32_t(block[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    std::array<std::uint32_t, 5> h_{};
    std::vector<unsigned char> buf_;
    std::uint64_t total_ = 0;
};

inline std::string sha1_hex(std::string_view s) {
    Sha1 h;
    h.update(s.data(), s.size());
    return h.hex_digest();
}

// --- formatting ---

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// --- file helpers ---

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One numeric per line or single-column CSV; optional non-numeric header;
// accepts ASCII hyphen and Unicode minus (U+2212).
inline std::vector<double> parse_zvalues(const std::string& text, const std::string& origin) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string s;
        for (std::size_t i = 0; i < line.size();) {
            // U+2212 minus sign, UTF-8 e2 88 92
            if (i + 2 < line.size() && static_cast<unsigned char>(line[i]) == 0xe2 &&
                static_cast<unsigned char>(line[i + 1]) == 0x88 &&
                static_cast<unsigned char>(line[i + 2]) == 0x92) {
                s += '-';
                i += 3;
            } else {
                s += line[i];
                ++i;
            }
        }
        std::size_t a = s.find_first_not_of(" \t,");
        if (a == std::string::npos) continue;
        std::size_t b = s.find_last_not_of(" \t,");
        s = s.substr(a, b - a + 1);
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            if (!std::isfinite(v)) throw std::invalid_argument(s);
            out.push_back(v);
        } catch (const std::exception&) {
            if (lineno == 1 && out.empty()) continue;  // header row
            throw DataError(origin + ": unparseable value on line " + std::to_string(lineno) + ": '" + s + "'");
        }
    }
    if (out.empty()) throw DataError(origin + ": no numeric values found");
    return out;
}

inline std::vector<double> read_zvalues(const std::filesystem::path& path) {
    return parse_zvalues(read_text_file(path), path.string());
}

// --- CSV tables ---

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& vals) {
        std::vector<std::string> r;
        r.reserve(vals.size());
        for (double v : vals) r.push_back(format_number(v));
        rows.push_back(std::move(r));
    }

    std::string to_string() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
        out << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << "\n";
        }
        return out.str();
    }
};

// --- run manifest ---

using ordered_json = nlohmann::ordered_json;

class RunWriter {
public:
    RunWriter(std::filesystem::path dir, std::string command) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        manifest_["command"] = std::move(command);
        manifest_["settings"] = ordered_json::object();
        manifest_["outputs"] = ordered_json::array();
    }

    template <typename T>
    void setting(const std::string& key, const T& value) {
        manifest_["settings"][key] = value;
    }

    void input_hash(const std::string& name, const std::string& content) {
        manifest_["inputs"][name] = sha1_hex(content);
    }

    void write(const std::string& filename, const std::string& content) {
        write_text_file(dir_ / filename, content);
        manifest_["outputs"].push_back({{"file", filename}, {"sha1", sha1_hex(content)}});
    }

    void finish() {
        std::string text = manifest_.dump(2);
        text += "\n";
        write_text_file(dir_ / "manifest.json", text);
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    ordered_json manifest_;
};

}  // namespace eb
