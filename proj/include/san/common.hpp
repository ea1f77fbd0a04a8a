#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace san {

// All recoverable failures surface as san::Error with a plain-text message.
// Usage/config problems are Error subclasses so the CLI can map exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

using std::int64_t;
using std::uint64_t;

} // namespace san
