#ifndef PC2_ERRORS_HPP
#define PC2_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pc2 {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inputs whose dimension counts do not agree (point vs. scaling vs. index tuple).
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

/// Requested basis would exceed the configured maximum term count.
class BasisTooLarge : public Error {
public:
    explicit BasisTooLarge(const std::string& msg) : Error(msg) {}
};

/// Least-squares system with fewer rows than unknowns.
class UnderdeterminedSystem : public Error {
public:
    explicit UnderdeterminedSystem(const std::string& msg) : Error(msg) {}
};

/// Least-squares system whose numerical rank is below the column count.
class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

/// Malformed, truncated, or version-incompatible serialized data.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

/// Invalid experiment configuration (bad value, unknown key, missing block).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// NaN or Inf encountered in a loss or gradient.
class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

/// File could not be read or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Reference solver failed to converge or hit an invalid state.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

/// Sensitivity indices requested for an output with no variance.
class ZeroVariance : public Error {
public:
    explicit ZeroVariance(const std::string& msg) : Error(msg) {}
};

} // namespace pc2

#endif
