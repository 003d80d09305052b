#include "reconfig/error.hpp"

namespace reconfig {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidVersion: return "InvalidVersion";
  case ErrorCode::InvalidName: return "InvalidName";
  case ErrorCode::MalformedTypeDef: return "MalformedTypeDef";
  case ErrorCode::DuplicateTypeDef: return "DuplicateTypeDef";
  case ErrorCode::NotFound: return "NotFound";
  case ErrorCode::AmbiguousVersion: return "AmbiguousVersion";
  case ErrorCode::UnresolvableExport: return "UnresolvableExport";
  case ErrorCode::DuplicateExport: return "DuplicateExport";
  case ErrorCode::MissingImport: return "MissingImport";
  case ErrorCode::AmbiguousImport: return "AmbiguousImport";
  case ErrorCode::DuplicateImport: return "DuplicateImport";
  case ErrorCode::NotImported: return "NotImported";
  case ErrorCode::InvalidatedImport: return "InvalidatedImport";
  case ErrorCode::UnknownModule: return "UnknownModule";
  case ErrorCode::WrongModuleKind: return "WrongModuleKind";
  case ErrorCode::InUse: return "InUse";
  case ErrorCode::ContentNotAClass: return "ContentNotAClass";
  case ErrorCode::NotAnInterface: return "NotAnInterface";
  case ErrorCode::DuplicateName: return "DuplicateName";
  case ErrorCode::MissingMethod: return "MissingMethod";
  case ErrorCode::EmptyComposite: return "EmptyComposite";
  case ErrorCode::RoleError: return "RoleError";
  case ErrorCode::TypeMismatch: return "TypeMismatch";
  case ErrorCode::AlreadyBound: return "AlreadyBound";
  case ErrorCode::UnknownBinding: return "UnknownBinding";
  case ErrorCode::NotAChild: return "NotAChild";
  case ErrorCode::CrossBindingExists: return "CrossBindingExists";
  case ErrorCode::ContainmentCycle: return "ContainmentCycle";
  case ErrorCode::UnsupportedBindingKind: return "UnsupportedBindingKind";
  case ErrorCode::UnknownComponent: return "UnknownComponent";
  case ErrorCode::UnknownPort: return "UnknownPort";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::UnknownElement: return "UnknownElement";
  case ErrorCode::UnknownAttribute: return "UnknownAttribute";
  case ErrorCode::NotImplemented: return "NotImplemented";
  case ErrorCode::InvalidDefinition: return "InvalidDefinition";
  case ErrorCode::VersionConflict: return "VersionConflict";
  case ErrorCode::UnboundInterface: return "UnboundInterface";
  case ErrorCode::UnknownMethod: return "UnknownMethod";
  case ErrorCode::ArityError: return "ArityError";
  case ErrorCode::GranularityForbidsSwap: return "GranularityForbidsSwap";
  case ErrorCode::ReconfigDuringCall: return "ReconfigDuringCall";
  case ErrorCode::CallDepthExceeded: return "CallDepthExceeded";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code))),
      code_(code),
      message_(std::move(message)),
      details_(std::move(details)) {
  render();
}

Error& Error::with_context(std::string frame) {
  context_.push_back(std::move(frame));
  render();
  return *this;
}

void Error::render() {
  rendered_.assign(to_string(code_));
  rendered_ += ": ";
  rendered_ += message_;
  for (auto it = context_.rbegin(); it != context_.rend(); ++it) {
    rendered_ += "\n  in ";
    rendered_ += *it;
  }
}

} // namespace reconfig
