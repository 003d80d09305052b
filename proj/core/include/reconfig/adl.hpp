#ifndef RECONFIG_ADL_HPP
#define RECONFIG_ADL_HPP

// Architecture descriptions: a strict XML subset with the elements
// definition, interface, component, content, file and binding.
//
//   <definition name="HelloWorld" version="2.0">
//       <interface name="r" role="server" signature="java.lang.Runnable"/>
//       <component name="client">
//           <interface name="s" role="client" signature="Service" version="1.0"/>
//           <content class="ClientImpl" version="1.0"/>
//           <file name="Request" version="1.0"/>
//       </component>
//       <binding client="this.r" server="client.r"/>
//   </definition>
//
// Comments and an `<?xml ...?>` prolog are accepted; DTDs, namespaces,
// character data and nested components are not.

#include "reconfig/component_model.hpp"
#include "reconfig/typedef_store.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reconfig {

struct SourceLoc {
  std::size_t line = 0;
  std::size_t col = 0;

  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
  // Locations never take part in structural equality.
  friend bool operator==(const SourceLoc&, const SourceLoc&) noexcept { return true; }
};

struct AdlInterface {
  std::string name;
  Role role = Role::Server;
  std::string signature;
  std::optional<VersionTag> version;
  SourceLoc loc;

  friend bool operator==(const AdlInterface&, const AdlInterface&) = default;
};

struct AdlContent {
  std::string class_name;
  std::optional<VersionTag> version;
  SourceLoc loc;

  TypeRef ref() const { return TypeRef{class_name, version}; }
  friend bool operator==(const AdlContent&, const AdlContent&) = default;
};

struct AdlFile {
  std::string name;
  std::optional<VersionTag> version;
  SourceLoc loc;

  TypeRef ref() const { return TypeRef{name, version}; }
  friend bool operator==(const AdlFile&, const AdlFile&) = default;
};

struct AdlComponent {
  std::string name;
  std::vector<AdlInterface> interfaces;
  AdlContent content;
  std::vector<AdlFile> files;
  SourceLoc loc;

  const AdlInterface* find_interface(std::string_view port) const noexcept;
  friend bool operator==(const AdlComponent&, const AdlComponent&) = default;
};

/// `comp.port`, or `this.port` for the definition's own interfaces.
struct AdlEndpoint {
  std::string component;
  std::string port;

  bool is_this() const noexcept { return component == "this"; }
  std::string str() const { return component + "." + port; }
  static std::optional<AdlEndpoint> parse(std::string_view text);

  friend bool operator==(const AdlEndpoint&, const AdlEndpoint&) = default;
};

struct AdlBinding {
  AdlEndpoint client;
  AdlEndpoint server;
  SourceLoc loc;

  friend bool operator==(const AdlBinding&, const AdlBinding&) = default;
};

struct AdlDefinition {
  std::string name;
  VersionTag version;
  std::vector<AdlInterface> interfaces;
  std::vector<AdlComponent> components;
  std::vector<AdlBinding> bindings;
  SourceLoc loc;

  const AdlComponent* find_component(std::string_view name) const noexcept;
  const AdlInterface* find_interface(std::string_view port) const noexcept;
  /// Resolves an endpoint to its declared interface, or nullptr.
  const AdlInterface* endpoint_interface(const AdlEndpoint& ep) const noexcept;

  friend bool operator==(const AdlDefinition&, const AdlDefinition&) = default;
};

/// Throws ParseError (details: line, col, expected), UnknownElement,
/// UnknownAttribute or NotImplemented. The result always satisfies
/// adl_invariant_violations() == {}.
AdlDefinition parse_adl(std::string_view text);
/// A single `<component>` element, as used by reconfiguration scripts.
AdlComponent parse_adl_component(std::string_view text);

std::string print_adl(const AdlDefinition& def);
std::string print_adl_component(const AdlComponent& component, int indent = 0);

/// Structural invariants of a definition: unique component names, bindings
/// naming declared ports, dotted endpoints, well-formed names.
std::vector<std::string> adl_invariant_violations(const AdlDefinition& def);

enum class Level { Error, Warning };

struct Diagnostic {
  Level level = Level::Error;
  std::string code;
  SourceLoc loc;
  std::string message;

  /// `LEVEL CODE location message`
  std::string str() const;
};

/// Static checks against a corpus, in document order. Empty means valid.
std::vector<Diagnostic> validate(const AdlDefinition& def, const CorpusStore& corpus);

} // namespace reconfig

#endif
