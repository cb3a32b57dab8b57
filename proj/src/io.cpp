#include "normnet/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <system_error>

#include "normnet/errors.hpp"

namespace normnet {

void write_u32le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("unexpected end of file reading u32");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void write_f32le(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32le(os, bits);
}

float read_f32le(std::istream& is) {
  const std::uint32_t bits = read_u32le(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void write_f32le_array(std::ostream& os, std::span<const float> v) {
  for (float x : v) write_f32le(os, x);
}

void read_f32le_array(std::istream& is, std::span<float> v) {
  for (float& x : v) x = read_f32le(is);
}

void write_bytes(std::ostream& os, std::span<const std::uint8_t> v) {
  os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size()));
}

void read_bytes(std::istream& is, std::span<std::uint8_t> v) {
  is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size()));
  if (!is) throw DataError("unexpected end of file reading byte block");
}

void expect_magic(std::istream& is, std::string_view magic, const std::string& what) {
  std::string buf(magic.size(), '\0');
  is.read(buf.data(), std::streamsize(magic.size()));
  if (!is || buf != magic) throw DataError(what + ": bad magic, expected \"" + std::string(magic) + "\"");
}

void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), std::streamsize(magic.size()));
}

std::string float_text(float v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string double_text(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

float parse_float(std::string_view s, const std::string& what) {
  float v = 0.0f;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError(what + ": cannot parse float from \"" + std::string(s) + "\"");
  return v;
}

double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError(what + ": cannot parse number from \"" + std::string(s) + "\"");
  return v;
}

long parse_long(std::string_view s, const std::string& what) {
  long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError(what + ": cannot parse integer from \"" + std::string(s) + "\"");
  return v;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot open file: " + p.string());
  is.seekg(0, std::ios::end);
  const auto size = is.tellg();
  is.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
  is.read(reinterpret_cast<char*>(out.data()), size);
  if (!is) throw DataError("cannot read file: " + p.string());
  return out;
}

void write_file_bytes(const std::filesystem::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot open file for write: " + p.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) throw DataError("cannot write file: " + p.string());
}

std::string read_file_text(const std::filesystem::path& p) {
  const auto bytes = read_file_bytes(p);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_text(const std::filesystem::path& p, std::string_view text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot open file for write: " + p.string());
  os.write(text.data(), std::streamsize(text.size()));
  if (!os) throw DataError("cannot write file: " + p.string());
}

std::ofstream open_out_binary(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot open file for write: " + p.string());
  return os;
}

std::ifstream open_in_binary(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot open file: " + p.string());
  return is;
}

}  // namespace normnet
