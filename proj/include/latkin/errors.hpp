#pragma once

#include <stdexcept>
#include <string>

namespace latkin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched sizes between sites, windows or matrices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad user input, such as an invalid parameter or config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Transition probabilities outside [0, 1] for the requested region.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class UnsupportedInput : public Error {
 public:
  using Error::Error;
};

// Evaluation requested at a point that is not the image of a lattice site.
class OffLattice : public Error {
 public:
  using Error::Error;
};

class LimitNotFound : public Error {
 public:
  using Error::Error;
};

class BoundaryReached : public Error {
 public:
  BoundaryReached(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class EvolutionExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace latkin
