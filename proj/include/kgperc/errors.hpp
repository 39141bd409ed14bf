#pragma once

#include <stdexcept>
#include <string>

namespace kgperc {

// Root of every error raised by the library. The CLI maps ValidationError,
// ConfigError and MissingStageError to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: unregistered nodes, out-of-range confidences, malformed lines.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Inconsistent or out-of-range configuration values.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// NaN/Inf encountered during training or scoring.
class NumericError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was asked to run without the artifact of a prior stage.
class MissingStageError : public Error {
public:
    MissingStageError(const std::string& artifact, const std::string& required_command)
        : Error("missing artifact '" + artifact + "'; run `kgperc " + required_command +
                "` first"),
          required_command_(required_command) {}

    const std::string& required_command() const { return required_command_; }

private:
    std::string required_command_;
};

// Checkpoint format errors. Each failure mode has its own type.
class FormatError : public Error {
public:
    using Error::Error;
};

class MagicMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace kgperc
