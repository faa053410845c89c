#pragma once

#include <stdexcept>
#include <string>

namespace entrywise {

// Broad failure classes. The CLI maps Config -> exit 1, everything else -> exit 2.
enum class ErrorClass { Config, Numerical, Usage };

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what, ErrorClass cls = ErrorClass::Numerical)
      : std::runtime_error(what), code_(std::move(code)), class_(cls) {}

  const std::string& code() const noexcept { return code_; }
  ErrorClass error_class() const noexcept { return class_; }

 private:
  std::string code_;
  ErrorClass class_;
};

#define ENTRYWISE_DEFINE_ERROR(Name, Code, Class)                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what, Class) {} \
  };

ENTRYWISE_DEFINE_ERROR(DimensionError, "DIMENSION", ErrorClass::Usage)
ENTRYWISE_DEFINE_ERROR(SpectrumError, "SPECTRUM", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(RankError, "RANK", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(ProbabilityError, "PROBABILITY", ErrorClass::Usage)
ENTRYWISE_DEFINE_ERROR(ConfigError, "CONFIG", ErrorClass::Config)
ENTRYWISE_DEFINE_ERROR(DomainError, "DOMAIN", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(SingularError, "SINGULAR", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(SingularFisherError, "SINGULAR_FISHER", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(DegenerateError, "DEGENERATE", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(TruthMissingError, "TRUTH_MISSING", ErrorClass::Usage)
ENTRYWISE_DEFINE_ERROR(SizeError, "SIZE", ErrorClass::Usage)
ENTRYWISE_DEFINE_ERROR(NotFoundError, "NOT_FOUND", ErrorClass::Numerical)
ENTRYWISE_DEFINE_ERROR(IoError, "IO", ErrorClass::Numerical)

#undef ENTRYWISE_DEFINE_ERROR

}  // namespace entrywise
