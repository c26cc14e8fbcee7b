// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fassim {

using cdouble = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorKind {
  Bounds,
  Domain,
  Model,
  Configuration,
  Framing,
  DegenerateChannel,
  Calibration,
  Asset,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above; the C
/// API maps the kind onto a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

/// Root of the bundled data assets. FASSIM_DATA_DIR in the environment wins
/// over the compiled-in default.
std::string data_dir();

/// A relative path missing from the working directory but present under
/// data_dir() resolves there; anything else is returned unchanged.
std::string resolve_data_path(const std::string& path);

/// Reads a whole file, raising ErrorKind::Asset when it cannot be opened.
std::string read_text_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }

}  // namespace fassim
