#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace apollo {

// Every failure the library reports is an apollo::Error; the gateway maps the
// concrete type onto an HTTP status and the CLI onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnknownTechnique : public Error {
 public:
  explicit UnknownTechnique(std::string name)
      : Error("unknown propaganda technique: '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class BodyTooLarge : public Error {
 public:
  BodyTooLarge(std::size_t length, std::size_t budget)
      : Error("text of " + std::to_string(length) + " characters exceeds the budget of " +
              std::to_string(budget)),
        length_(length),
        budget_(budget) {}
  std::size_t length() const noexcept { return length_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t length_;
  std::size_t budget_;
};

class MalformedOutput : public Error {
 public:
  MalformedOutput(const std::string& what, int attempts = 1)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status = 0) : Error(what), status_(status) {}
  /// HTTP status when the server answered, 0 for connection-level failures.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class MissingUserPosition : public Error {
 public:
  using Error::Error;
};

class EmptyRegistry : public Error {
 public:
  EmptyRegistry() : Error("model registry is empty") {}
};

class InvalidRegistry : public Error {
 public:
  using Error::Error;
};

class InvalidProfile : public Error {
 public:
  using Error::Error;
};

class IncompleteResponses : public Error {
 public:
  explicit IncompleteResponses(std::vector<std::string> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<std::string>& ids) {
    std::string out = "unanswered questionnaire items:";
    for (const auto& id : ids) out += " " + id;
    return out;
  }
  std::vector<std::string> missing_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace apollo
