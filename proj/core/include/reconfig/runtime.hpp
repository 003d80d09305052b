#ifndef RECONFIG_RUNTIME_HPP
#define RECONFIG_RUNTIME_HPP

// Simulated execution over a live architecture.
//
// Every time a call crosses into a component the interceptor pushes that
// component's info module as the context module (Enter) and pops it on the
// way out (Exit), including on error paths. The receiver then checks each
// argument: the declared parameter type is loaded through the callee's own
// info module and must be the same DefinedType as the argument's runtime
// type. For `object` parameters the argument's runtime type name is looked
// up instead, which is where privately loaded copies of an exchanged class
// collide.
//
// Content behaviour is fixed: a primitive that receives a call forwards one
// call per method over each of its bound client ports (arguments are built
// in its own context; `object` arguments are its content instance), then
// returns a value of the declared return type built in its context. A
// declared return type of `object` yields the content instance itself.

#include "reconfig/factory.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace reconfig {

struct Value {
  DefinedType rt_type;
  std::string payload;
};

inline constexpr std::size_t kMaxCallDepth = 32;

/// Calls `method` on `component.port`. A server port is an external entry;
/// a client port is a call made by that component through its binding.
std::optional<Value> invoke(Architecture& arch, std::string_view component, std::string_view port,
                            std::string_view method, std::vector<Value> args);

/// invoke() with arguments constructed from type names in the calling
/// component's context (the component named in the call).
std::optional<Value> invoke_named(Architecture& arch, std::string_view component, std::string_view port,
                                  std::string_view method, const std::vector<std::string>& arg_types);

/// A value of `type_name` as constructed inside `component`.
Value make_value(Architecture& arch, std::string_view component, std::string_view type_name);

struct SwapRecord {
  std::string component;
  DefinedType old_content;
  DefinedType new_content;
  ModuleId new_module;
};

/// Loads `new_content` from `source` (the architecture's corpus by default)
/// into a fresh resource module and rewires only the content import of the
/// component's info module. The old content type and its module stay live.
SwapRecord swap_implementation(Architecture& arch, std::string_view component, const TypeRef& new_content,
                               std::shared_ptr<const CorpusStore> source = nullptr);

/// Replaces (or creates) the binding of `client`. Atomic: on failure the
/// previous binding is untouched.
void rebind(Architecture& arch, const PortRef& client, const PortRef& server);
void unbind(Architecture& arch, const PortRef& client);

/// Adds a primitive under the root, creating modules the way the factory
/// would and reusing the live interface and shared modules.
ComponentId add_component(Architecture& arch, const AdlComponent& component,
                          std::shared_ptr<const CorpusStore> source = nullptr);
/// Removes an unbound primitive together with its info and implementation
/// modules (never forcing a module out from under another user).
void remove_component(Architecture& arch, std::string_view component);

struct BenchReport {
  std::uint64_t calls = 0;
  std::chrono::nanoseconds with_interceptor_time{0};
  std::chrono::nanoseconds without_interceptor_time{0};
  std::uint64_t bookkeeping_ops = 0;
  std::uint64_t ops_per_call = 0;

  std::string str() const;
};

struct BenchEntry {
  std::string component;
  std::string port;
  std::string method;
};

/// Default entry: the root's first server port and its first method.
BenchEntry default_bench_entry(Architecture& arch);

/// Runs `calls` invocations with interception on, counting context pushes,
/// pops and argument checks, then the same calls with interception off for
/// a timing baseline. The trace is not recorded while benchmarking.
BenchReport bench_interception(Architecture& arch, std::uint64_t calls,
                               const std::optional<BenchEntry>& entry = std::nullopt);

} // namespace reconfig

#endif
