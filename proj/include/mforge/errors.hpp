#pragma once

#include <stdexcept>
#include <string>

namespace mforge {

/// Bad input data or configuration (maps to CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required input artifact does not exist (maps to CLI exit code 3).
class MissingArtifactError : public std::runtime_error {
public:
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mforge
