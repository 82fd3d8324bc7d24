#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hydropseudo {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fixed-capacity structure (jet order, jet variables) was exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Division by a zero constant term, log at zero, and similar.
class SingularPointError : public Error {
public:
    using Error::Error;
};

/// Evaluation point violates an admissibility guard of a kernel or system.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or incomplete configuration (missing PhiTable, wrong family for an example, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A spec document failed schema validation; path names the offending key.
class SchemaError : public ConfigError {
public:
    SchemaError(std::string path, const std::string& what) : ConfigError(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// A numerical procedure did not reach its requested accuracy.
class ToleranceError : public Error {
public:
    using Error::Error;
};

/// A kernel does not have the log-type diagonal singularity assumed by the series expansion.
class SingularStructureError : public Error {
public:
    using Error::Error;
};

/// A relation was requested on a branch where it does not apply.
class InapplicableRelationError : public Error {
public:
    using Error::Error;
};

}  // namespace hydropseudo
