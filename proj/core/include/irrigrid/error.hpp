#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace irrigrid {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Malformed IRG1/IRGS bytes. offset() is the absolute byte position of the
// field that failed to parse.
class FormatError : public Error {
public:
  FormatError(std::uint64_t offset, const std::string& what)
      : Error("byte offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

// Two grids that must share a GridMeta do not.
class AlignmentError : public Error {
public:
  using Error::Error;
};

// A cluster-quality index is undefined for the given model (k < 2, a
// degenerate point set, or model selection that found no scorable k).
class UndefinedMetric : public Error {
public:
  using Error::Error;
};

// A model whose geometry makes an index meaningless (coincident centroids).
class InvalidModel : public Error {
public:
  using Error::Error;
};

// Input rasters do not cover the requested area.
class CoverageError : public Error {
public:
  using Error::Error;
};

} // namespace irrigrid
