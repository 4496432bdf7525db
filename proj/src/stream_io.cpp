#include "eltmcm/stream_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <string>

#include "eltmcm/error.hpp"

namespace eltmcm {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta";
  return p;
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace

void write_stream(const std::filesystem::path& path, std::span<const double> samples, double sample_rate) {
  std::ofstream data(path, std::ios::binary);
  if (!data) throw IoError("cannot open '" + path.string() + "' for writing");
  for (double v : samples) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    data.write(buf, 8);
  }
  if (!data) throw IoError("write to '" + path.string() + "' failed");
  std::ofstream meta(sidecar(path));
  if (!meta) throw IoError("cannot open '" + sidecar(path).string() + "' for writing");
  meta << "length " << samples.size() << '\n' << std::setprecision(17) << "sample_rate " << sample_rate << '\n';
}

SampleStream read_stream(const std::filesystem::path& path) {
  std::ifstream meta(sidecar(path));
  if (!meta) throw IoError("missing sidecar '" + sidecar(path).string() + "'");
  std::size_t length = 0;
  SampleStream s;
  bool have_len = false, have_rate = false;
  std::string key;
  while (meta >> key) {
    if (key == "length") {
      have_len = static_cast<bool>(meta >> length);
    } else if (key == "sample_rate") {
      have_rate = static_cast<bool>(meta >> s.sample_rate);
    } else {
      throw IoError("unknown sidecar key '" + key + "'");
    }
  }
  if (!have_len || !have_rate) throw IoError("sidecar must define length and sample_rate");
  std::ifstream data(path, std::ios::binary);
  if (!data) throw IoError("cannot open '" + path.string() + "'");
  s.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    char buf[8];
    if (!data.read(buf, 8)) throw IoError("'" + path.string() + "' holds fewer than " + std::to_string(length) + " samples");
    std::uint64_t bits = 0;
    std::memcpy(&bits, buf, 8);
    s.samples[i] = std::bit_cast<double>(to_little(bits));
  }
  return s;
}

}  // namespace eltmcm
