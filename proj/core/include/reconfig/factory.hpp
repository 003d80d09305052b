#ifndef RECONFIG_FACTORY_HPP
#define RECONFIG_FACTORY_HPP

// Turns an architecture description into a module graph and a live
// component architecture.
//
// Under PerComponent granularity every type an application touches gets one
// owner module:
//   itf(K)     one per distinct interface signature K = (name, version),
//              also exporting types reachable from K that nobody declared
//              shared (first signature in key order wins);
//   shared(..) one per group of declared `file` classes, groups being the
//              connected unions of each component's file closures;
//   impl(C)    one per component implementation, exporting whatever else
//              the content class reaches; these copies are private.
// Under SingleLoader a single module exports everything and all components
// share one info module, so no implementation can be replaced.

#include "reconfig/adl.hpp"
#include "reconfig/component_model.hpp"
#include "reconfig/module_system.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reconfig {

enum class Granularity { SingleLoader, PerComponent };

std::string_view to_string(Granularity g) noexcept;
/// "single" or "per-component"; "selective" is reserved and throws
/// NotImplemented.
Granularity parse_granularity(std::string_view text);

enum class ModuleRole { Implementation, Interface, Shared, Everything };

struct PlannedResource {
  std::string label;
  ModuleRole role = ModuleRole::Implementation;
  std::string owner; // component name for implementation modules
  std::vector<ExportDecl> exports;
};

struct PlannedInfo {
  std::string label;
  std::vector<std::string> components;
  std::vector<ImportDecl> imports;
  /// Import name -> resource label.
  std::map<std::string, std::string> wiring;
};

struct ModulePlan {
  Granularity granularity = Granularity::PerComponent;
  std::vector<PlannedResource> resources;
  std::vector<PlannedInfo> infos;

  const PlannedResource* find_resource(std::string_view label) const noexcept;
  /// nullptr for a root composite without interfaces.
  const PlannedInfo* info_for(std::string_view component) const noexcept;

  /// One line per module, RESOURCE lines then INFO lines, each group sorted.
  std::string report() const;
};

/// Requires validate(def, corpus) to be empty (InvalidDefinition otherwise).
/// Throws VersionConflict when one loader would need two versions of a name.
ModulePlan plan_modules(const AdlDefinition& def, Granularity granularity, const CorpusStore& corpus);

/// Runtime bookkeeping kept alongside the architecture. See runtime.hpp.
struct TraceEvent {
  enum class Kind { Enter, Exit, Check, Swap };

  std::uint64_t seq = 0;
  Kind kind = Kind::Enter;
  std::string component;    // Enter, Exit, Swap
  ModuleId module;          // Enter
  std::string type_name;    // Check
  bool ok = true;           // Check
  std::string old_content;  // Swap
  std::string new_content;  // Swap

  /// `SEQ KIND args...`
  std::string str() const;
};

struct Architecture {
  std::shared_ptr<ModuleManager> mgr;
  std::shared_ptr<const CorpusStore> corpus;
  AdlDefinition def;
  ModulePlan plan;
  Assembly assembly;
  ComponentId root;

  std::map<std::string, ModuleId> module_by_label;
  /// Implementation modules created for a component, including swaps.
  std::map<std::string, std::vector<ModuleId>> owned_modules;

  // Invocation state.
  std::vector<ModuleId> context;
  std::vector<TraceEvent> trace;
  std::uint64_t next_seq = 1;
  std::uint64_t bookkeeping_ops = 0;
  bool record_trace = true;
  bool intercept = true;
  bool in_call = false;
  std::function<void(const TraceEvent&, Architecture&)> on_trace;
  std::uint64_t swap_count = 0;

  Granularity granularity() const noexcept { return plan.granularity; }
  ComponentId component(std::string_view name) const;
  PortRef endpoint(const AdlEndpoint& ep) const;

  /// Structural state plus the module graph; excludes the trace.
  std::string report() const;
  std::string trace_text() const;
};

/// Creates the planned modules, the components and every ADL binding. On
/// failure every module created so far is removed again before rethrowing,
/// with the ADL location attached to the error.
std::unique_ptr<Architecture> instantiate(const AdlDefinition& def, const ModulePlan& plan,
                                          std::shared_ptr<ModuleManager> mgr,
                                          std::shared_ptr<const CorpusStore> corpus);

/// plan_modules followed by instantiate.
std::unique_ptr<Architecture> build_architecture(const AdlDefinition& def, Granularity granularity,
                                                 std::shared_ptr<ModuleManager> mgr,
                                                 std::shared_ptr<const CorpusStore> corpus);

} // namespace reconfig

#endif
