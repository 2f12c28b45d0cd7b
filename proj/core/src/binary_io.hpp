// Little-endian byte encoding and atomic file writes shared by the F2FE and
// F2FM formats. Internal to the core library.
#ifndef F2F_BINARY_IO_HPP
#define F2F_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "f2f/errors.hpp"

namespace f2f::detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(std::string_view bytes) { buf_.append(bytes); }

    /// u32 length prefix followed by the bytes.
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    const std::string& bytes() const noexcept { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
        }
    }

    std::string buf_;
};

/// Reads little-endian values; running off the end throws CorruptFileError.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::string_view raw(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::string str() { return std::string(raw(u32())); }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n) {
            throw CorruptFileError(context_ + ": truncated at byte " + std::to_string(pos_));
        }
    }

private:
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string_view data_;
    std::string context_;
    std::size_t pos_ = 0;
};

/// Whole file contents. Throws FormatError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace f2f::detail

#endif  // F2F_BINARY_IO_HPP
