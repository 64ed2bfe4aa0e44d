#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "adm3/cwt.hpp"
#include "adm3/grid.hpp"
#include "adm3/mat3.hpp"
#include "adm3/wavelet.hpp"

namespace adm3::io {

// ---------------------------------------------------------------- algebra text

struct AlgebraFile {
  std::vector<Mat3> mats;
  std::vector<std::string> labels;  // empty, or one per matrix ("" when unlabeled)
};

struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(int line, int column, const std::string& what);
};

struct WrongCount : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// '#' starts a comment. A matrix is 3 consecutive lines of 3 numbers; blocks
// are separated by blank lines. A line "name:" directly above a block labels it.
AlgebraFile parse_algebra(const std::string& text);
std::string write_algebra(const AlgebraFile& a);

// ---------------------------------------------------------------- binary formats

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MagicMismatch : FormatError {
  using FormatError::FormatError;
};
struct Truncated : FormatError {
  using FormatError::FormatError;
};
struct DimensionOverflow : FormatError {
  using FormatError::FormatError;
};

using Bytes = std::vector<std::uint8_t>;

// V3D1. Samples are stored as float32, so encoding rounds each sample to the
// nearest float; decode(encode(v)) re-encodes to identical bytes.
Bytes encode_volume(const Volume& v);
Volume decode_volume(const Bytes& b);

// C3W1. The translation grid and wavelet id follow the parameter list; each
// node stores its chart point with the finite-extension index appended.
Bytes encode_coefficients(const Coefficients& c);
// Rebuilds node matrices from the family, parameters and chart points.
Coefficients decode_coefficients(const Bytes& b);

Bytes read_file(const std::filesystem::path& p);
// Writes to a temporary file in the same directory, then renames it over p.
void write_file_atomic(const std::filesystem::path& p, const Bytes& b);
void write_file_atomic(const std::filesystem::path& p, const std::string& s);

inline Volume read_volume(const std::filesystem::path& p) { return decode_volume(read_file(p)); }
inline void write_volume(const std::filesystem::path& p, const Volume& v) { write_file_atomic(p, encode_volume(v)); }
inline Coefficients read_coefficients(const std::filesystem::path& p) { return decode_coefficients(read_file(p)); }
inline void write_coefficients(const std::filesystem::path& p, const Coefficients& c) {
  write_file_atomic(p, encode_coefficients(c));
}

// ---------------------------------------------------------------- wavelet side-car

// Enough to rebuild a wavelet exactly: generator kind and its parameters.
struct WaveletMeta {
  std::string generator;  // "bump-deriv", "shell" or "samples"
  VanishingPattern pattern;
  std::string generator_id;
  BumpSpec bump;                                  // bump-deriv
  double lo = 1.0, hi = 2.0, smoothness = 1.0;  // shell
};

std::string write_wavelet_meta(const WaveletMeta& m);
WaveletMeta parse_wavelet_meta(const std::string& text);
// Closed-form rebuild when the generator allows it, else the sampled fallback.
Wavelet rebuild_wavelet(const WaveletMeta& m, const Volume& samples);

}  // namespace adm3::io
