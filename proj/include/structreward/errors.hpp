#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace structreward {

// Base of every typed error raised by the library. `name()` is the stable
// identifier printed by the CLI; `what()` carries context for humans.
class Error : public std::runtime_error {
public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

#define STRUCTREWARD_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                              \
  public:                                                                  \
    explicit Name(const std::string& message) : Error(#Name, message) {}   \
  }

// caption ingestion
STRUCTREWARD_DEFINE_ERROR(SchemaError);
STRUCTREWARD_DEFINE_ERROR(DanglingAnchor);
STRUCTREWARD_DEFINE_ERROR(DuplicateId);
STRUCTREWARD_DEFINE_ERROR(InvariantViolation);

// grammar parsing
STRUCTREWARD_DEFINE_ERROR(EmptyInput);
STRUCTREWARD_DEFINE_ERROR(UnknownToken);
STRUCTREWARD_DEFINE_ERROR(UnresolvedDefinite);
STRUCTREWARD_DEFINE_ERROR(MalformedClause);

// similarity
STRUCTREWARD_DEFINE_ERROR(TableDimensionMismatch);

// question generation
STRUCTREWARD_DEFINE_ERROR(MissingSlot);

// verification
STRUCTREWARD_DEFINE_ERROR(VerifierUnavailable);
STRUCTREWARD_DEFINE_ERROR(MalformedResponse);
STRUCTREWARD_DEFINE_ERROR(Timeout);
STRUCTREWARD_DEFINE_ERROR(UnknownSlotAnchor);

// synthetic worlds
STRUCTREWARD_DEFINE_ERROR(LexiconTooSmall);
STRUCTREWARD_DEFINE_ERROR(NothingToCorrupt);
STRUCTREWARD_DEFINE_ERROR(EmptyWorld);

// audit
STRUCTREWARD_DEFINE_ERROR(NoRootRelation);

// trainer
STRUCTREWARD_DEFINE_ERROR(NonFiniteGradient);

// config
STRUCTREWARD_DEFINE_ERROR(UnknownKey);
STRUCTREWARD_DEFINE_ERROR(TypeMismatch);

#undef STRUCTREWARD_DEFINE_ERROR

}  // namespace structreward
