#pragma once

#include <stdexcept>
#include <string>

namespace crossview {

/// Base class for all library errors. The CLI maps subclasses to exit codes:
/// DataError -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed files, missing paths, shape mismatches in user-supplied data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed (rank, degeneracy, domain).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class ShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

class RankDeficient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AmbientTooSmall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A vector whose Q-norm is below threshold: it lies in the kernel's null
/// space and the geodesic cosine is undefined for it.
class DegenerateVector : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonRigidTransform : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CameraInsideGeometry : public DataError {
 public:
  using DataError::DataError;
};

class EmptyClassList : public DataError {
 public:
  using DataError::DataError;
};

class EmptyEvaluation : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientPairs : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace crossview
