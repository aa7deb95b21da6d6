#pragma once

#include <stdexcept>
#include <string>

namespace harkit {

// Base class for all recoverable toolkit errors. CLI maps these to exit 2,
// NumericError to exit 3.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

class DomainError : public Error {
public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

class LabelError : public Error {
public:
  explicit LabelError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class OrderError : public Error {
public:
  explicit OrderError(const std::string& msg) : Error(msg) {}
};

class VocabularyError : public Error {
public:
  explicit VocabularyError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class WindowError : public Error {
public:
  explicit WindowError(const std::string& msg) : Error(msg) {}
};

class LengthError : public Error {
public:
  explicit LengthError(const std::string& msg) : Error(msg) {}
};

class InputError : public Error {
public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

class SchemaError : public Error {
public:
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

class TemplateError : public Error {
public:
  explicit TemplateError(const std::string& msg) : Error(msg) {}
};

// Numeric failures abort the surrounding computation (exit 3 in the CLI).
class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace harkit
