#pragma once

#include <stdexcept>
#include <string>

namespace sdmk {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateCellError : Error {
    using Error::Error;
};

struct ProjectionError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct FactorizationError : Error {
    using Error::Error;
};

}  // namespace sdmk
