#pragma once

#include <stdexcept>
#include <string>

namespace synthline {

/// Base class for every error raised by the library. `code()` is a stable,
/// machine-readable identifier (e.g. "ParseError") used by the CLI and API.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace synthline
