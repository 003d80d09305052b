#ifndef RECONFIG_COMPONENT_MODEL_HPP
#define RECONFIG_COMPONENT_MODEL_HPP

// Structural component model: primitive and composite components with named
// client/server interfaces, primitive bindings, and shared components (a
// component may have several parent composites; containment stays a DAG).
//
// A binding is type-checked against module identities: both ends must load
// the same DefinedType for the signature through their own info modules.

#include "reconfig/module_system.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reconfig {

enum class Role { Client, Server };
enum class ComponentKind { Primitive, Composite };

std::string_view to_string(Role role) noexcept;

struct ComponentId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ComponentId&, const ComponentId&) = default;
};

struct PortSpec {
  std::string name;
  Role role = Role::Server;
  std::string signature;
  VersionTag version;
};

struct InterfacePort {
  std::string name;
  Role role = Role::Server;
  std::string signature;
  VersionTag version;
  ComponentId owner;
};

struct PortRef {
  ComponentId owner;
  std::string port;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
  friend bool operator==(const PortRef&, const PortRef&) = default;
};

struct ComponentInstance {
  ComponentId id;
  std::string name;
  ComponentKind kind = ComponentKind::Primitive;
  std::vector<InterfacePort> interfaces;
  std::optional<DefinedType> content; // primitives only
  std::set<ComponentId> children;     // composites only
  std::set<ComponentId> parents;
  ModuleId info_module;

  const InterfacePort* find_port(std::string_view port) const noexcept;
};

enum class BindingKind { Primitive, Composite };

/// Where a binding sits relative to the containment tree. Export and Import
/// bindings connect a composite's own port, seen from inside, to one of its
/// children: a composite server port acts as the client end of an Export,
/// a composite client port as the server end of an Import.
enum class BindingScope { Sibling, Export, Import };

std::string_view to_string(BindingScope scope) noexcept;

struct BindingId {
  std::uint64_t value = 0;
  friend auto operator<=>(const BindingId&, const BindingId&) = default;
};

struct BindingRecord {
  BindingId id;
  PortRef client;
  PortRef server;
  BindingKind kind = BindingKind::Primitive;
  BindingScope scope = BindingScope::Sibling;
};

/// Conformance of `content` to the methods of `signature`: method name,
/// arity and parameter type names must match exactly. Returns the first
/// missing method name.
std::optional<std::string> find_missing_method(const TypeDef& signature, const TypeDef& content);

class Assembly {
public:
  /// Loads each port signature through `info_module` to check conformance.
  ComponentId new_primitive(std::string name, std::vector<PortSpec> interfaces, DefinedType content,
                            ModuleId info_module, ModuleManager& mgr);
  ComponentId new_composite(std::string name, std::vector<PortSpec> interfaces, std::vector<ComponentId> children,
                            ModuleId info_module);

  /// std::nullopt means the binding would be accepted. Never throws for
  /// type problems; those are returned.
  std::optional<Error> check_binding(const PortRef& client, const PortRef& server, ModuleManager& mgr) const;
  const BindingRecord& bind(const PortRef& client, const PortRef& server, ModuleManager& mgr,
                            BindingKind kind = BindingKind::Primitive);
  void unbind(BindingId id);

  void add_child(ComponentId composite, ComponentId child);
  void remove_child(ComponentId composite, ComponentId child);

  /// Drops a component that has no parents, children or bindings left.
  void erase(ComponentId id);
  /// Replaces a primitive's content; conformance is the caller's job.
  void set_content(ComponentId id, DefinedType content);

  const ComponentInstance& get(ComponentId id) const;
  std::optional<ComponentId> find(std::string_view name) const noexcept;
  const InterfacePort& port(const PortRef& ref) const;

  const std::map<ComponentId, ComponentInstance>& components() const noexcept { return components_; }
  const std::map<BindingId, BindingRecord>& bindings() const noexcept { return bindings_; }
  const BindingRecord* binding(BindingId id) const noexcept;
  const BindingRecord* binding_from(const PortRef& client) const noexcept;
  std::vector<BindingId> bindings_of(ComponentId id) const;

  bool is_descendant(ComponentId node, ComponentId ancestor) const;

  /// Bindings whose check_binding no longer succeeds.
  std::vector<BindingId> broken_bindings(ModuleManager& mgr) const;

  std::string port_name(const PortRef& ref) const;
  /// Deterministic structural dump.
  std::string report() const;

private:
  ComponentId add(ComponentInstance instance);
  std::vector<InterfacePort> make_ports(std::vector<PortSpec> specs, ComponentId owner) const;
  std::optional<BindingScope> classify(const InterfacePort& client, const InterfacePort& server) const;

  std::uint32_t last_component_ = 0;
  std::uint64_t last_binding_ = 0;
  std::map<ComponentId, ComponentInstance> components_;
  std::map<BindingId, BindingRecord> bindings_;
};

} // namespace reconfig

#endif
