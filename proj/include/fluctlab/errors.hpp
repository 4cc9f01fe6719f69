#pragma once

#include <stdexcept>
#include <string>

namespace fluctlab {

// Error taxonomy shared by all modules. The CLI maps kinds to exit codes:
// usage -> 2, numeric -> 3, everything else -> 1.
enum class ErrorKind {
    usage,             // bad arguments, unknown preset, metric/law mismatch
    numeric,           // quadrature or root-find failed to reach tolerance
    precision,         // Monte Carlo sample too small for requested precision
    unsupported,       // operation rejects the measure (e.g. infinite mass)
    refinement,        // step size too coarse for the requested tolerance
    horizon,           // simulation horizon too short (censoring too high)
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error numeric_failure(const std::string& what) { return Error(ErrorKind::numeric, what); }
inline Error precision_failure(const std::string& what) { return Error(ErrorKind::precision, what); }
inline Error unsupported_measure(const std::string& what) { return Error(ErrorKind::unsupported, what); }
inline Error refinement_needed(const std::string& what) { return Error(ErrorKind::refinement, what); }
inline Error horizon_too_short(const std::string& what) { return Error(ErrorKind::horizon, what); }

}  // namespace fluctlab
