#pragma once

#include <stdexcept>
#include <string>

namespace eden {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input too large for the configured container (codec capacity, u32 length fields).
class SizeError : public Error {
public:
    using Error::Error;
};

/// Malformed encoding or inconsistent symbol geometry.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable key material.
class KeyError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario, registry or codec configuration. `key()` names the offending field when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string key = {})
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace eden
