#pragma once

#include <stdexcept>
#include <string>

namespace argrank {

// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorCategory { config, data, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define ARGRANK_DEFINE_ERROR(Name, Category)                     \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what)                       \
        : Error(ErrorCategory::Category, #Name ": " + what) {}   \
  };

// corpus ingestion
ARGRANK_DEFINE_ERROR(MalformedLine, data)
ARGRANK_DEFINE_ERROR(OffsetMismatch, data)
ARGRANK_DEFINE_ERROR(DanglingReference, data)
ARGRANK_DEFINE_ERROR(SplitInfeasible, data)
// reconstruction
ARGRANK_DEFINE_ERROR(EmptyUnit, data)
// embeddings
ARGRANK_DEFINE_ERROR(ProviderUnavailable, runtime)
ARGRANK_DEFINE_ERROR(DimensionMismatch, runtime)
ARGRANK_DEFINE_ERROR(CorruptEntry, data)
// model / training
ARGRANK_DEFINE_ERROR(ShapeMismatch, runtime)
ARGRANK_DEFINE_ERROR(LengthMismatch, runtime)
ARGRANK_DEFINE_ERROR(NonFiniteLoss, runtime)
// evaluation
ARGRANK_DEFINE_ERROR(MemberMismatch, data)
ARGRANK_DEFINE_ERROR(MissingPrediction, data)
// pipeline
ARGRANK_DEFINE_ERROR(ConfigInvalid, config)
ARGRANK_DEFINE_ERROR(MissingArtifact, config)

#undef ARGRANK_DEFINE_ERROR

}  // namespace argrank
