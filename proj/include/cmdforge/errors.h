#pragma once

#include <stdexcept>
#include <string>

namespace cmdforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed mechanism spec, task file, dataset line or run config.
class SpecError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Symmetry search refused because the instance exceeds the configured caps.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

class NoVerdictFound : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class PolicyExhausted : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

// A discussion that cannot reach a final verdict without guessing (e.g. the
// secretary never produced a bracketed verdict). Carries the serialized
// transcript so callers can persist what happened.
class DiscussionAborted : public Error {
 public:
  DiscussionAborted(const std::string& what, std::string transcript_json)
      : Error(what), transcript_json_(std::move(transcript_json)) {}

  const std::string& transcript_json() const { return transcript_json_; }

 private:
  std::string transcript_json_;
};

}  // namespace cmdforge
