#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class OrderingError : public Error { using Error::Error; };
class MissingDataError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class TooSmallError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class InsufficientDataError : public Error { using Error::Error; };
class ZeroProbabilityError : public Error { using Error::Error; };
class OracleLimitError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };

}  // namespace crn
