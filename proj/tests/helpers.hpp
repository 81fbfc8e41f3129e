// Shared test utilities: tolerances, scratch directories, tool invocation
// and the independent DFT oracle.
#pragma once

#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "isnet/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Unique scratch directory, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;
  explicit ScratchDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("isnet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
}

struct ToolResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

// Runs the CLI binary (path from the ISNET_TOOL environment variable).
inline ToolResult run_tool(const std::string& args) {
  const char* tool = std::getenv("ISNET_TOOL");
  if (!tool) throw std::runtime_error("ISNET_TOOL not set; run through ctest");
  static int counter = 0;
  const std::string out_file = (std::filesystem::temp_directory_path() /
                                ("isnet_tool_out_" + std::to_string(::getpid()) + "_" +
                                 std::to_string(counter++)))
                                   .string();
  const std::string cmd = std::string(tool) + " " + args + " > " + out_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  ToolResult res;
  res.exit_code = (rc == -1) ? -1 : WEXITSTATUS(rc);
  res.output = read_file(out_file);
  std::filesystem::remove(out_file);
  return res;
}

// O(N^2) reference DFT, independent of the FFT under test.
inline std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0;
    for (std::size_t t = 0; t < n; ++t)
      s += x[t] * std::polar(1.0, -two_pi * static_cast<double>(k) * static_cast<double>(t) /
                                      static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

}  // namespace testutil
