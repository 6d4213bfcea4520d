#pragma once

#include <stdexcept>
#include <string>

namespace counsel {

// Root of every error the library throws. Each failure surface gets its own
// type so callers (the engine, the service, the CLI) can decide per stage
// whether to abort, fall back, or fail open.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COUNSEL_DECLARE_ERROR(Name, Base) \
  class Name : public Base {              \
   public:                                \
    using Base::Base;                     \
  }

COUNSEL_DECLARE_ERROR(ValidationError, Error);
COUNSEL_DECLARE_ERROR(UnknownStrategy, ValidationError);
COUNSEL_DECLARE_ERROR(PreconditionError, Error);
COUNSEL_DECLARE_ERROR(ConfigError, Error);
COUNSEL_DECLARE_ERROR(TemplateError, Error);

// Model output that could not be interpreted. Stages catch this to run their
// single repair retry.
COUNSEL_DECLARE_ERROR(ParseFailure, Error);
COUNSEL_DECLARE_ERROR(NoJsonFound, ParseFailure);

COUNSEL_DECLARE_ERROR(BackendExhausted, Error);
COUNSEL_DECLARE_ERROR(ScriptParseError, Error);

COUNSEL_DECLARE_ERROR(PerceptionError, Error);
COUNSEL_DECLARE_ERROR(MemoryError, Error);
COUNSEL_DECLARE_ERROR(StrategyError, Error);
COUNSEL_DECLARE_ERROR(StageError, Error);
COUNSEL_DECLARE_ERROR(GenerationError, Error);
COUNSEL_DECLARE_ERROR(TerminationJudgeError, Error);
COUNSEL_DECLARE_ERROR(TherapySelectError, Error);
COUNSEL_DECLARE_ERROR(EfficacyError, Error);
COUNSEL_DECLARE_ERROR(InitError, Error);
COUNSEL_DECLARE_ERROR(SimulatorError, Error);
COUNSEL_DECLARE_ERROR(CorpusError, Error);
COUNSEL_DECLARE_ERROR(JudgeError, Error);

COUNSEL_DECLARE_ERROR(StorageError, Error);
COUNSEL_DECLARE_ERROR(NotFound, StorageError);
COUNSEL_DECLARE_ERROR(CorruptRecord, StorageError);

#undef COUNSEL_DECLARE_ERROR

class SchemaError : public ValidationError {
 public:
  SchemaError(std::string field, const std::string& message)
      : ValidationError("schema error at '" + field + "': " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool retryable)
      : Error(message), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class ScriptMiss : public Error {
 public:
  explicit ScriptMiss(std::string prompt_hash)
      : Error("no script rule matches prompt " + prompt_hash), prompt_hash_(std::move(prompt_hash)) {}

  const std::string& prompt_hash() const noexcept { return prompt_hash_; }

 private:
  std::string prompt_hash_;
};

}  // namespace counsel
