#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace eltmcm {

struct SampleStream {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

/// Writes raw little-endian 64-bit floats to `path` and a text sidecar
/// `path` + ".meta" holding "length <n>" and "sample_rate <hz>".
void write_stream(const std::filesystem::path& path, std::span<const double> samples, double sample_rate);
SampleStream read_stream(const std::filesystem::path& path);

}  // namespace eltmcm
