#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace normnet {

// Little-endian binary primitives. Byte order is written out explicitly so
// the file formats are the same on any host.
void write_u32le(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32le(std::istream& is);
void write_f32le(std::ostream& os, float v);
float read_f32le(std::istream& is);
void write_f32le_array(std::ostream& os, std::span<const float> v);
void read_f32le_array(std::istream& is, std::span<float> v);

void write_bytes(std::ostream& os, std::span<const std::uint8_t> v);
void read_bytes(std::istream& is, std::span<std::uint8_t> v);

void expect_magic(std::istream& is, std::string_view magic, const std::string& what);
void write_magic(std::ostream& os, std::string_view magic);

// Shortest round-trip decimal form (std::to_chars); locale independent, so
// text formats re-serialize byte-identically.
std::string float_text(float v);
std::string double_text(double v);
float parse_float(std::string_view s, const std::string& what = "value");
double parse_double(std::string_view s, const std::string& what = "value");
long parse_long(std::string_view s, const std::string& what = "value");

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p);
void write_file_bytes(const std::filesystem::path& p, std::span<const std::uint8_t> bytes);
std::string read_file_text(const std::filesystem::path& p);
void write_file_text(const std::filesystem::path& p, std::string_view text);

std::ofstream open_out_binary(const std::filesystem::path& p);
std::ifstream open_in_binary(const std::filesystem::path& p);

}  // namespace normnet
