#pragma once

#include <stdexcept>
#include <string>

namespace d2d {

// Root of every exception thrown by the library. Each module derives its own
// error kinds so callers can catch at the granularity they need.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace d2d
