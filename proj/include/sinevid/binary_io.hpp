#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sinevid {

using Bytes = std::vector<std::uint8_t>;

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) noexcept;
std::string hex64(std::uint64_t value);

// Little-endian encoder.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f32s(std::span<const float> v);
    void raw(std::span<const std::uint8_t> v);
    void tag(std::string_view four_chars);
    void str(std::string_view s); // u32 length + bytes

    const Bytes& bytes() const noexcept { return buf_; }
    Bytes take() { return std::move(buf_); }
    std::size_t size() const noexcept { return buf_.size(); }

private:
    Bytes buf_;
};

// Bounds-checked little-endian decoder; reading past the end throws
// TruncatedError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    void f32s(std::span<float> out);
    std::span<const std::uint8_t> raw(std::size_t n);
    std::string str();

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

Bytes read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);

} // namespace sinevid
