#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ontosim {

/// Base class for every error raised by the library.  Each derived type
/// names the condition that was rejected, so callers can catch precisely.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

/// State norm fell below the representable floor; normalizing would divide
/// by (numerically) zero.
class ZeroNorm : public SimError {
 public:
  explicit ZeroNorm(const std::string& what) : SimError("ZeroNorm: " + what) {}
};

/// Two objects that must share a grid (geometry, boundary, resolution) do not.
class IncompatibleGrid : public SimError {
 public:
  explicit IncompatibleGrid(const std::string& what)
      : SimError("IncompatibleGrid: " + what) {}
};

/// Operation requires a specific spin structure (e.g. two components per
/// particle) that the state does not carry.
class WrongSpinDims : public SimError {
 public:
  explicit WrongSpinDims(const std::string& what)
      : SimError("WrongSpinDims: " + what) {}
};

/// Operation implemented only for a specific particle count.
class UnsupportedN : public SimError {
 public:
  explicit UnsupportedN(const std::string& what)
      : SimError("UnsupportedN: " + what) {}
};

/// Guiding field evaluated where |psi|^2 is below the node guard; the
/// velocity is not defined there and we refuse to extrapolate.
class NodeProximity : public SimError {
 public:
  NodeProximity(const std::string& what, double time)
      : SimError("NodeProximity: " + what + " (t=" + std::to_string(time) + ")"),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Jump-rate denominator |psi(q)|^2 vanished at the occupied configuration.
class ZeroOccupancy : public SimError {
 public:
  explicit ZeroOccupancy(const std::string& what)
      : SimError("ZeroOccupancy: " + what) {}
};

/// Total jump rate exceeds what the sub-step refinement is willing to track.
class StiffRates : public SimError {
 public:
  explicit StiffRates(const std::string& what)
      : SimError("StiffRates: " + what) {}
};

/// Configuration not present in the enumerated sector basis.
class UnknownConfiguration : public SimError {
 public:
  explicit UnknownConfiguration(const std::string& what)
      : SimError("UnknownConfiguration: " + what) {}
};

/// The two ensembles handed to a comparison are not comparable (different
/// grids, empty, or non-normalized weights).
class EnsembleMismatch : public SimError {
 public:
  explicit EnsembleMismatch(const std::string& what)
      : SimError("EnsembleMismatch: " + what) {}
};

/// A sampling density integrated to (numerically) zero.
class DegenerateDensity : public SimError {
 public:
  explicit DegenerateDensity(const std::string& what)
      : SimError("DegenerateDensity: " + what) {}
};

/// Spacetime point lies before the initial data surface.
class Unreachable : public SimError {
 public:
  explicit Unreachable(const std::string& what)
      : SimError("Unreachable: " + what) {}
};

/// A statistic was requested over an empty sample.
class EmptySample : public SimError {
 public:
  explicit EmptySample(const std::string& what)
      : SimError("EmptySample: " + what) {}
};

/// Filesystem-level failure while writing or reading run outputs.
class IoError : public SimError {
 public:
  explicit IoError(const std::string& what) : SimError("IoError: " + what) {}
};

/// Config text could not be parsed; carries the location when known.
class ParseError : public SimError {
 public:
  ParseError(const std::string& what, int line, int column)
      : SimError("ParseError at " + std::to_string(line) + ":" +
                 std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Config parsed but violated one or more constraints; every violation is
/// collected before this is thrown.
class ValidationError : public SimError {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : SimError(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "ValidationError (" + std::to_string(v.size()) + "):";
    for (const auto& msg : v) s += "\n  - " + msg;
    return s;
  }
  std::vector<std::string> violations_;
};

/// A run completed but its failure fraction exceeded the allowed threshold.
class RunFailure : public SimError {
 public:
  explicit RunFailure(const std::string& what)
      : SimError("RunFailure: " + what) {}
};

}  // namespace ontosim
