#ifndef RECONFIG_MODULE_SYSTEM_HPP
#define RECONFIG_MODULE_SYSTEM_HPP

// Modules, the module manager and the import search policy.
//
// Resource modules export type definitions from a corpus and are the
// defining loaders of the types they materialize. Info modules define
// nothing: each import is wired to exactly one resource module and every
// load is delegated along that wire. There is no parent delegation; the
// wiring graph is the only delegation structure.

#include "reconfig/typedef_store.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace reconfig {

/// Assigned by a ModuleManager; never reused within that manager.
struct ModuleId {
  std::uint64_t value = 0;

  std::string str() const { return "m" + std::to_string(value); }
  friend auto operator<=>(const ModuleId&, const ModuleId&) = default;
};

struct ExportDecl {
  std::string name;
  VersionTag version;

  TypeKey key() const { return TypeKey{name, version}; }
  friend auto operator<=>(const ExportDecl&, const ExportDecl&) = default;
  friend bool operator==(const ExportDecl&, const ExportDecl&) = default;
};

struct ImportDecl {
  std::string name;
  VersionTag version;

  TypeKey key() const { return TypeKey{name, version}; }
  friend auto operator<=>(const ImportDecl&, const ImportDecl&) = default;
  friend bool operator==(const ImportDecl&, const ImportDecl&) = default;
};

/// A loaded type. Identity is exactly (name, defining module): the same
/// definition materialized by two modules yields two distinct types.
class DefinedType {
public:
  DefinedType(std::string name, ModuleId defined_by, TypeDef def);

  const std::string& name() const noexcept { return state_->name; }
  ModuleId defined_by() const noexcept { return state_->defined_by; }
  /// Snapshot taken when the type was defined.
  const TypeDef& def() const noexcept { return state_->def; }

  /// `Name@m3`
  std::string str() const { return name() + "@" + defined_by().str(); }

  /// True when both handles refer to the same cached definition object.
  bool same_instance(const DefinedType& other) const noexcept { return state_ == other.state_; }

  friend bool operator==(const DefinedType& a, const DefinedType& b) noexcept {
    return a.defined_by() == b.defined_by() && a.name() == b.name();
  }

private:
  struct State {
    std::string name;
    ModuleId defined_by;
    TypeDef def;
  };
  std::shared_ptr<const State> state_;
};

bool same_type(const DefinedType& a, const DefinedType& b) noexcept;

struct ResourceModule {
  ModuleId id;
  std::string label;
  std::map<std::string, ExportDecl> exports;
  std::shared_ptr<const CorpusStore> source;
  std::map<std::string, DefinedType> defined;
};

struct InfoModule {
  ModuleId id;
  std::string label;
  std::map<std::string, ImportDecl> imports;
  std::map<std::string, ModuleId> wiring;
  /// Imports whose provider was force-removed.
  std::set<std::string> invalidated;
};

struct ModuleEvent {
  enum class Kind { Added, Removed };
  Kind kind;
  ModuleId id;

  friend bool operator==(const ModuleEvent&, const ModuleEvent&) = default;
};

struct RemovalReport {
  ModuleId removed;
  std::vector<ModuleId> invalidated_dependents;
};

using SubscriptionId = std::uint64_t;

/// Owns every module and serializes all transitions. Listeners are invoked
/// synchronously, in transition order, and must not call back into the
/// manager.
class ModuleManager {
public:
  using Listener = std::function<void(const ModuleEvent&)>;

  ModuleManager() = default;
  ModuleManager(const ModuleManager&) = delete;
  ModuleManager& operator=(const ModuleManager&) = delete;

  ModuleId create_resource_module(std::vector<ExportDecl> exports, std::shared_ptr<const CorpusStore> source,
                                  std::string label = {});

  /// Import search policy: each import must be exported by exactly one live
  /// resource module among `candidates` (all live resource modules when
  /// omitted). Absence and ambiguity are errors; there is no tie-break.
  ModuleId create_info_module(std::vector<ImportDecl> imports,
                              std::optional<std::vector<ModuleId>> candidates = std::nullopt,
                              std::string label = {});

  /// Atomically replaces the import named `old_name` with `replacement`,
  /// resolved among `candidates` (all live resource modules when omitted).
  void rewire_import(ModuleId info, std::string_view old_name, ImportDecl replacement,
                     std::optional<std::vector<ModuleId>> candidates = std::nullopt);

  DefinedType load_type(ModuleId via, std::string_view name);

  RemovalReport remove_module(ModuleId id, bool force);

  SubscriptionId subscribe(Listener listener);
  void unsubscribe(SubscriptionId id);

  bool is_live(ModuleId id) const;
  bool is_resource(ModuleId id) const;
  bool is_info(ModuleId id) const;
  std::set<ModuleId> live_modules() const;
  std::vector<ModuleEvent> event_log() const;

  /// Copies; the manager may be mutated concurrently by other flows.
  std::optional<ResourceModule> resource(ModuleId id) const;
  std::optional<InfoModule> info(ModuleId id) const;
  std::vector<ModuleId> resource_modules() const;
  std::vector<ModuleId> info_modules() const;
  /// Live info modules wired to `id`.
  std::vector<ModuleId> dependents(ModuleId id) const;
  std::string label(ModuleId id) const;

  /// Deterministic text dump of the live module set and all wirings, with
  /// module ids rendered as given by `name_of` (default: `m<N>`).
  std::string report(const std::function<std::string(ModuleId)>& name_of = {}) const;

private:
  using Module = std::variant<ResourceModule, InfoModule>;

  ModuleId next_id();
  void emit(ModuleEvent event);
  ModuleId resolve_import(const ImportDecl& import, const std::optional<std::vector<ModuleId>>& candidates) const;
  std::vector<ModuleId> dependents_locked(ModuleId id) const;

  mutable std::mutex mutex_;
  std::uint64_t last_id_ = 0;
  std::map<ModuleId, Module> modules_;
  std::vector<ModuleEvent> log_;
  std::map<SubscriptionId, Listener> listeners_;
  SubscriptionId last_subscription_ = 0;
};

/// Rebuilds the live-module set by replaying `log` from an empty manager.
std::set<ModuleId> replay_live_set(std::span<const ModuleEvent> log);

} // namespace reconfig

#endif
