#pragma once

#include <stdexcept>
#include <string>

namespace anchor {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateLikelihood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlreadyAnchored : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooFewMembers : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllCandidatesFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotImageShaped : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, long row, long col)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", col " +
                           std::to_string(col) + ")"),
        row(row),
        col(col) {}
  long row;
  long col;
};

}  // namespace anchor
