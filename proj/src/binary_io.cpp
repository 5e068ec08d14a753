#include "sinevid/binary_io.hpp"

#include "sinevid/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sinevid {

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v)
{
    u32(std::bit_cast<std::uint32_t>(v));
}

void ByteWriter::f32s(std::span<const float> v)
{
    buf_.reserve(buf_.size() + 4 * v.size());
    for (float x : v)
        f32(x);
}

void ByteWriter::raw(std::span<const std::uint8_t> v)
{
    buf_.insert(buf_.end(), v.begin(), v.end());
}

void ByteWriter::tag(std::string_view four_chars)
{
    for (char c : four_chars)
        buf_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::str(std::string_view s)
{
    u32(static_cast<std::uint32_t>(s.size()));
    for (char c : s)
        buf_.push_back(static_cast<std::uint8_t>(c));
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n)
{
    if (n > remaining())
        throw TruncatedError("unexpected end of data: wanted " + std::to_string(n) + " bytes at offset " +
                             std::to_string(pos_) + ", " + std::to_string(remaining()) + " left");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint32_t ByteReader::u32()
{
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64()
{
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float ByteReader::f32()
{
    return std::bit_cast<float>(u32());
}

void ByteReader::f32s(std::span<float> out)
{
    if (out.size() > remaining() / 4)
        raw(out.size() * 4); // throws
    for (auto& v : out)
        v = f32();
}

std::string ByteReader::str()
{
    const auto n = u32();
    auto b = raw(n);
    return std::string(b.begin(), b.end());
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read failed: " + path.string());
    return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out)
            throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

} // namespace sinevid
