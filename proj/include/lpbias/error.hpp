#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpbias {

// All toolkit failures derive from Error. The CLI maps TransportError to
// exit code 2 and every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OovError : public ValidationError {
 public:
  explicit OovError(std::string token)
      : ValidationError("token not in vocabulary: '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

class MultiTokenError : public ValidationError {
 public:
  MultiTokenError(std::string word, std::vector<std::string> pieces)
      : ValidationError("word tokenizes to " + std::to_string(pieces.size()) +
                        " units: '" + word + "'"),
        word_(std::move(word)),
        pieces_(std::move(pieces)) {}
  const std::string& word() const { return word_; }
  const std::vector<std::string>& pieces() const { return pieces_; }

 private:
  std::string word_;
  std::vector<std::string> pieces_;
};

class AgreementError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyMeasurementError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedCorrelationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedCosineError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedOperationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Backend could not be reached or answered with a server-side failure.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpbias
