#ifndef RECONFIG_ERROR_HPP
#define RECONFIG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reconfig {

enum class ErrorCode {
  // typedef store
  InvalidVersion,
  InvalidName,
  MalformedTypeDef,
  DuplicateTypeDef,
  NotFound,
  AmbiguousVersion,
  // module system
  UnresolvableExport,
  DuplicateExport,
  MissingImport,
  AmbiguousImport,
  DuplicateImport,
  NotImported,
  InvalidatedImport,
  UnknownModule,
  WrongModuleKind,
  InUse,
  // component model
  ContentNotAClass,
  NotAnInterface,
  DuplicateName,
  MissingMethod,
  EmptyComposite,
  RoleError,
  TypeMismatch,
  AlreadyBound,
  UnknownBinding,
  NotAChild,
  CrossBindingExists,
  ContainmentCycle,
  UnsupportedBindingKind,
  UnknownComponent,
  UnknownPort,
  // adl
  ParseError,
  UnknownElement,
  UnknownAttribute,
  NotImplemented,
  // factory
  InvalidDefinition,
  VersionConflict,
  // runtime
  UnboundInterface,
  UnknownMethod,
  ArityError,
  GranularityForbidsSwap,
  ReconfigDuringCall,
  CallDepthExceeded,
  // plumbing
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. `code()` identifies the failure
/// class (scripts match on its name); `details()` carries the structured
/// payload in a fixed per-code order, e.g. for TypeMismatch
/// {type name, caller module, callee module}.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message, std::vector<std::string> details = {});

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return to_string(code_); }
  const std::string& message() const noexcept { return message_; }
  const std::vector<std::string>& details() const noexcept { return details_; }
  const std::vector<std::string>& context() const noexcept { return context_; }

  // Outermost context last.
  Error& with_context(std::string frame);

  const char* what() const noexcept override { return rendered_.c_str(); }

private:
  void render();

  ErrorCode code_;
  std::string message_;
  std::vector<std::string> details_;
  std::vector<std::string> context_;
  std::string rendered_;
};

} // namespace reconfig

#endif
