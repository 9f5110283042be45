#pragma once

#include <stdexcept>
#include <string>

namespace phiheat {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (collar bounds, R_max <= 1, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

class MetricDegeneracyError : public Error {
public:
  using Error::Error;
};

// Grid too coarse for the requested derivative stencil.
class ResolutionError : public Error {
public:
  using Error::Error;
};

class WeightMismatchError : public Error {
public:
  using Error::Error;
};

// Point lies on a blown-up locus of a projective chart.
class ChartDomainError : public Error {
public:
  using Error::Error;
};

class SingularExpansionError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class DegenerateInputError : public Error {
public:
  using Error::Error;
};

class BallEscapeError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace phiheat
