#ifndef HEXWAR_ERROR_HPP
#define HEXWAR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hexwar {

/// Base of every error raised by the library. `kind()` names the error class
/// so that the service and CLI can report it without RTTI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define HEXWAR_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(tag, what) {}         \
  };

HEXWAR_DEFINE_ERROR(CoordinateError, "coordinate")
HEXWAR_DEFINE_ERROR(DomainError, "domain")
HEXWAR_DEFINE_ERROR(RuleError, "rule")
HEXWAR_DEFINE_ERROR(TurnOrderError, "turn_order")
HEXWAR_DEFINE_ERROR(SequencingError, "sequencing")
HEXWAR_DEFINE_ERROR(GenerationError, "generation")
HEXWAR_DEFINE_ERROR(StateError, "state")
HEXWAR_DEFINE_ERROR(ShapeError, "shape")
HEXWAR_DEFINE_ERROR(FormatError, "format")
HEXWAR_DEFINE_ERROR(VersionError, "version")
HEXWAR_DEFINE_ERROR(DivergenceError, "divergence")
HEXWAR_DEFINE_ERROR(ConfigError, "config")
HEXWAR_DEFINE_ERROR(LookupError, "lookup")
HEXWAR_DEFINE_ERROR(CompatibilityError, "compatibility")
HEXWAR_DEFINE_ERROR(EvaluationError, "evaluation")
HEXWAR_DEFINE_ERROR(LegalityError, "legality")
HEXWAR_DEFINE_ERROR(PreconditionError, "precondition")
HEXWAR_DEFINE_ERROR(IntegrityError, "integrity")

#undef HEXWAR_DEFINE_ERROR

}  // namespace hexwar

#endif  // HEXWAR_ERROR_HPP
