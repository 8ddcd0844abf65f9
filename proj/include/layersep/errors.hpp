#pragma once

#include <stdexcept>
#include <string>

namespace layersep {

/// Input file could not be parsed; message carries the path and line number.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A value violates a documented invariant (negative modulus, mu <= 0, ...).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Friction lookup for a surface pair that is not in the table.
class UnknownPairError : public std::runtime_error {
public:
  UnknownPairError(const std::string& a, const std::string& b)
      : std::runtime_error("no friction entry for surface pair (" + a + ", " + b + ")"),
        surface_a(a),
        surface_b(b) {}

  std::string surface_a;
  std::string surface_b;
};

/// A (phase, event) pair that the grasp transition table rejects.
class IllegalTransition : public std::runtime_error {
public:
  explicit IllegalTransition(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace layersep
