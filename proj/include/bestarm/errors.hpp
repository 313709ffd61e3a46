#pragma once

#include <stdexcept>
#include <string>

namespace bestarm {

// Base of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyRowError : public Error {
public:
    using Error::Error;
};

class DuplicateObservationError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class RaggedMatrixError : public Error {
public:
    using Error::Error;
};

class ExhaustedError : public Error {
public:
    using Error::Error;
};

/// Raised for invalid hyperparameters or budget combinations. The CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace bestarm
