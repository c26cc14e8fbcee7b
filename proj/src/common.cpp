// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fassim/rng.hpp"

#ifndef FASSIM_DEFAULT_DATA_DIR
#define FASSIM_DEFAULT_DATA_DIR "data"
#endif

namespace fassim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Model: return "model error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Framing: return "framing error";
    case ErrorKind::DegenerateChannel: return "degenerate channel";
    case ErrorKind::Calibration: return "calibration error";
    case ErrorKind::Asset: return "asset error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

std::string data_dir() {
  if (const char* env = std::getenv("FASSIM_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return FASSIM_DEFAULT_DATA_DIR;
}

std::string resolve_data_path(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_relative() && !std::filesystem::exists(p)) {
    const std::filesystem::path q = std::filesystem::path(data_dir()) / p;
    if (std::filesystem::exists(q)) return q.string();
  }
  return path;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Asset, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = splitmix64(seed);
  for (std::uint64_t p : path) k = splitmix64(k ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return k;
}

}  // namespace fassim
