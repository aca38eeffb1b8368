#pragma once

// Byte-level little-endian readers and writers shared by the binary file
// formats. Not installed; formats pin their layout in their own headers.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "hod/errors.hpp"

namespace hod::wire {

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataError("cannot open '" + path + "' for writing");
    }

    void u8(std::uint8_t v) { raw(&v, 1); }

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 4);
    }

    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 8);
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

    void f64(double d) {
        std::uint64_t v;
        std::memcpy(&v, &d, 8);
        u64(v);
    }

    void raw(const void* p, std::streamsize n) {
        out_.write(static_cast<const char*>(p), n);
        if (!out_) throw DataError("write failed");
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw DataError("cannot open '" + path + "'");
    }

    std::uint8_t u8() {
        unsigned char b;
        raw(&b, 1);
        return b;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

    double f64() {
        std::uint64_t v = u64();
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }

    void raw(void* p, std::streamsize n) {
        in_.read(static_cast<char*>(p), n);
        if (in_.gcount() != n) {
            throw DataError("'" + path_ + "': truncated at byte offset " +
                            std::to_string(offset_ + in_.gcount()));
        }
        offset_ += n;
    }

    /// Peek without consuming; used to sniff the magic of a file.
    bool try_peek(void* p, std::streamsize n) {
        in_.read(static_cast<char*>(p), n);
        const bool ok = in_.gcount() == n;
        in_.clear();
        in_.seekg(0);
        return ok;
    }

    void expect_eof() {
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw DataError("'" + path_ + "': trailing bytes after offset " +
                            std::to_string(offset_));
        }
    }

    std::int64_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::ifstream in_;
    std::string path_;
    std::int64_t offset_ = 0;
};

} // namespace hod::wire
