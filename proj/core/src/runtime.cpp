#include "reconfig/runtime.hpp"

#include <algorithm>
#include <sstream>

namespace reconfig {
namespace {

void record(Architecture& a, TraceEvent e) {
  if (!a.record_trace) return;
  e.seq = a.next_seq++;
  a.trace.push_back(e);
  if (a.on_trace) a.on_trace(a.trace.back(), a);
}

void record_check(Architecture& a, const std::string& type_name, bool ok) {
  if (a.intercept) ++a.bookkeeping_ops;
  TraceEvent e;
  e.kind = TraceEvent::Kind::Check;
  e.type_name = type_name;
  e.ok = ok;
  record(a, std::move(e));
}

/// Interceptor: makes the component's info module the context module for
/// the duration of the call.
class ContextScope {
public:
  ContextScope(Architecture& a, const ComponentInstance& c) : a_(a), name_(c.name) {
    if (!a_.intercept) return;
    a_.context.push_back(c.info_module);
    ++a_.bookkeeping_ops;
    active_ = true;
    TraceEvent e;
    e.kind = TraceEvent::Kind::Enter;
    e.component = name_;
    e.module = c.info_module;
    try {
      record(a_, std::move(e));
    } catch (...) {
      pop();
      throw;
    }
  }

  ~ContextScope() {
    if (!active_) return;
    pop();
    TraceEvent e;
    e.kind = TraceEvent::Kind::Exit;
    e.component = name_;
    try {
      record(a_, std::move(e));
    } catch (...) {
      // A trace hook failing on the way out must not mask the call result.
    }
  }

  ContextScope(const ContextScope&) = delete;
  ContextScope& operator=(const ContextScope&) = delete;

private:
  void pop() {
    a_.context.pop_back();
    ++a_.bookkeeping_ops;
    active_ = false;
  }

  Architecture& a_;
  std::string name_;
  bool active_ = false;
};

class CallScope {
public:
  explicit CallScope(Architecture& a) : a_(a), was_(a.in_call) { a_.in_call = true; }
  ~CallScope() { a_.in_call = was_; }
  CallScope(const CallScope&) = delete;
  CallScope& operator=(const CallScope&) = delete;

private:
  Architecture& a_;
  bool was_;
};

void guard_reconfig(const Architecture& a, std::string_view what) {
  if (a.in_call)
    throw Error(ErrorCode::ReconfigDuringCall, std::string(what) + " is not allowed while a call is in progress");
}

Value construct(Architecture& a, const ComponentInstance& c, std::string_view type_name, std::string payload) {
  if (type_name == kObjectType) {
    if (!c.content)
      throw Error(ErrorCode::InvalidArgument, "composite " + c.name + " has no content instance to pass as object",
                  {c.name});
    return Value{*c.content, std::move(payload)};
  }
  return Value{a.mgr->load_type(c.info_module, type_name), std::move(payload)};
}

std::string describe(const Architecture& a, const DefinedType& t) {
  return t.str() + " [" + a.mgr->label(t.defined_by()) + "]";
}

class Engine {
public:
  explicit Engine(Architecture& a) : a_(a) {}

  std::optional<Value> deliver(ComponentId target, const std::string& port, std::string_view method,
                               const std::vector<Value>& args, std::size_t depth) {
    if (depth > kMaxCallDepth)
      throw Error(ErrorCode::CallDepthExceeded, "call chain deeper than " + std::to_string(kMaxCallDepth));
    const auto& c = a_.assembly.get(target);
    const auto& p = a_.assembly.port(PortRef{target, port});
    ContextScope scope(a_, c);

    const auto signature = a_.mgr->load_type(c.info_module, p.signature);
    const auto* sig = signature.def().find_method(method);
    if (!sig)
      throw Error(ErrorCode::UnknownMethod, p.signature + " has no method '" + std::string(method) + "'",
                  {p.signature, std::string(method)});
    if (sig->params.size() != args.size())
      throw Error(ErrorCode::ArityError,
                  sig->str() + " takes " + std::to_string(sig->params.size()) + " argument(s), got " +
                      std::to_string(args.size()),
                  {sig->name, std::to_string(sig->params.size()), std::to_string(args.size())});
    check_args(c, *sig, args);

    if (c.kind == ComponentKind::Composite) {
      if (p.role == Role::Server) {
        const auto* b = a_.assembly.binding_from(PortRef{target, port});
        if (!b)
          throw Error(ErrorCode::UnboundInterface, c.name + "." + port + " is not bound to any child",
                      {c.name + "." + port});
        return deliver(b->server.owner, b->server.port, method, args, depth + 1);
      }
      return route(target, port, method, args, depth + 1);
    }
    return behave(c, *sig, depth);
  }

  std::optional<Value> route(ComponentId from, const std::string& port, std::string_view method,
                             const std::vector<Value>& args, std::size_t depth) {
    const auto* b = a_.assembly.binding_from(PortRef{from, port});
    if (!b) {
      const auto name = a_.assembly.port_name(PortRef{from, port});
      throw Error(ErrorCode::UnboundInterface, name + " is not bound", {name});
    }
    const auto server = b->server;
    return deliver(server.owner, server.port, method, args, depth);
  }

private:
  void check_args(const ComponentInstance& callee, const MethodSig& sig, const std::vector<Value>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& arg = args[i];
      const std::string name = sig.params[i] == kObjectType ? arg.rt_type.name() : sig.params[i];
      std::optional<DefinedType> expected;
      try {
        expected = a_.mgr->load_type(callee.info_module, name);
      } catch (const Error& e) {
        record_check(a_, name, false);
        throw Error(ErrorCode::TypeMismatch,
                    callee.name + " cannot see " + name + " (" + e.message() + "); argument is " + describe(a_, arg.rt_type),
                    {name, arg.rt_type.defined_by().str(), "none"});
      }
      if (!same_type(*expected, arg.rt_type)) {
        record_check(a_, name, false);
        throw Error(ErrorCode::TypeMismatch,
                    "argument " + std::to_string(i + 1) + " of " + sig.name + " is " + describe(a_, arg.rt_type) +
                        " but " + callee.name + " expects " + describe(a_, *expected),
                    {name, arg.rt_type.defined_by().str(), expected->defined_by().str()});
      }
      record_check(a_, name, true);
    }
  }

  std::optional<Value> behave(const ComponentInstance& c, const MethodSig& sig, std::size_t depth) {
    for (const auto& q : c.interfaces) {
      if (q.role != Role::Client || !a_.assembly.binding_from(PortRef{c.id, q.name})) continue;
      const auto qsig = a_.mgr->load_type(c.info_module, q.signature);
      for (const auto& m : qsig.def().methods) {
        std::vector<Value> out_args;
        for (const auto& p : m.params) out_args.push_back(construct(a_, c, p, c.name + "." + sig.name));
        route(c.id, q.name, m.name, out_args, depth + 1);
      }
    }
    if (sig.returns == kVoidType) return std::nullopt;
    return construct(a_, c, sig.returns, c.name + "." + sig.name);
  }

  Architecture& a_;
};

} // namespace

Value make_value(Architecture& arch, std::string_view component, std::string_view type_name) {
  const auto& c = arch.assembly.get(arch.component(component));
  return construct(arch, c, type_name, c.name + ":" + std::string(type_name));
}

std::optional<Value> invoke(Architecture& arch, std::string_view component, std::string_view port,
                            std::string_view method, std::vector<Value> args) {
  const auto id = arch.component(component);
  const auto& p = arch.assembly.port(PortRef{id, std::string(port)});
  CallScope call(arch);
  Engine engine(arch);
  if (p.role == Role::Server) return engine.deliver(id, std::string(port), method, args, 0);
  return engine.route(id, std::string(port), method, args, 0);
}

std::optional<Value> invoke_named(Architecture& arch, std::string_view component, std::string_view port,
                                  std::string_view method, const std::vector<std::string>& arg_types) {
  std::vector<Value> args;
  for (const auto& t : arg_types) args.push_back(make_value(arch, component, t));
  return invoke(arch, component, port, method, std::move(args));
}

SwapRecord swap_implementation(Architecture& arch, std::string_view component, const TypeRef& new_content,
                               std::shared_ptr<const CorpusStore> source) {
  guard_reconfig(arch, "swap");
  if (arch.granularity() == Granularity::SingleLoader)
    throw Error(ErrorCode::GranularityForbidsSwap,
                "architecture uses a single loader; implementations cannot be replaced", {std::string(component)});
  const auto id = arch.component(component);
  const auto& c = arch.assembly.get(id);
  if (c.kind != ComponentKind::Primitive)
    throw Error(ErrorCode::InvalidArgument, c.name + " is a composite and has no content", {c.name});

  const auto src = source ? source : arch.corpus;
  const auto key = src->resolve(new_content);
  const auto& def = *src->find(key);
  if (def.kind != TypeKind::Class)
    throw Error(ErrorCode::ContentNotAClass, key.str() + " is an interface, not a class", {key.name});
  for (const auto& p : c.interfaces) {
    if (p.role != Role::Server) continue;
    const auto sig = arch.mgr->load_type(c.info_module, p.signature);
    if (auto missing = find_missing_method(sig.def(), def))
      throw Error(ErrorCode::MissingMethod, key.str() + " does not implement " + p.signature + "." + *missing,
                  {p.signature, *missing});
  }

  const auto old_content = *c.content;
  const auto label = "swap" + std::to_string(arch.swap_count + 1) + "(" + key.str() + ")";
  const auto module = arch.mgr->create_resource_module({ExportDecl{key.name, key.version}}, src, label);
  std::optional<DefinedType> fresh;
  try {
    arch.mgr->rewire_import(c.info_module, old_content.name(), ImportDecl{key.name, key.version},
                            std::vector<ModuleId>{module});
    try {
      fresh = arch.mgr->load_type(c.info_module, key.name);
      if (const auto broken = arch.assembly.broken_bindings(*arch.mgr); !broken.empty())
        throw Error(ErrorCode::TypeMismatch, "swap would break " + std::to_string(broken.size()) + " binding(s)");
    } catch (...) {
      arch.mgr->rewire_import(c.info_module, key.name,
                              ImportDecl{old_content.def().name, old_content.def().version},
                              std::vector<ModuleId>{old_content.defined_by()});
      throw;
    }
  } catch (...) {
    arch.mgr->remove_module(module, true);
    throw;
  }

  arch.assembly.set_content(id, *fresh);
  arch.owned_modules[c.name].push_back(module);
  arch.module_by_label[label] = module;
  ++arch.swap_count;

  TraceEvent e;
  e.kind = TraceEvent::Kind::Swap;
  e.component = c.name;
  e.old_content = old_content.str();
  e.new_content = fresh->str();
  record(arch, std::move(e));
  return SwapRecord{c.name, old_content, *fresh, module};
}

void rebind(Architecture& arch, const PortRef& client, const PortRef& server) {
  guard_reconfig(arch, "rebind");
  if (auto err = arch.assembly.check_binding(client, server, *arch.mgr)) throw *err;
  if (const auto* existing = arch.assembly.binding_from(client)) {
    if (existing->server == server) return;
    const auto old = *existing;
    arch.assembly.unbind(old.id);
    try {
      arch.assembly.bind(client, server, *arch.mgr);
    } catch (...) {
      arch.assembly.bind(old.client, old.server, *arch.mgr);
      throw;
    }
    return;
  }
  arch.assembly.bind(client, server, *arch.mgr);
}

void unbind(Architecture& arch, const PortRef& client) {
  guard_reconfig(arch, "unbind");
  const auto* b = arch.assembly.binding_from(client);
  if (!b) {
    const auto name = arch.assembly.port_name(client);
    throw Error(ErrorCode::UnknownBinding, name + " is not bound", {name});
  }
  arch.assembly.unbind(b->id);
}

ComponentId add_component(Architecture& arch, const AdlComponent& component,
                          std::shared_ptr<const CorpusStore> source) {
  guard_reconfig(arch, "add");
  if (arch.granularity() == Granularity::SingleLoader)
    throw Error(ErrorCode::GranularityForbidsSwap, "architecture uses a single loader; no new code can be loaded",
                {component.name});
  if (arch.assembly.find(component.name))
    throw Error(ErrorCode::DuplicateName, "component '" + component.name + "' already exists", {component.name});

  const auto src = source ? source : arch.corpus;
  auto merged = arch.def;
  merged.components.push_back(component);
  if (const auto violations = adl_invariant_violations(merged); !violations.empty())
    throw Error(ErrorCode::InvalidDefinition, violations.front(), violations);
  const auto plan = plan_modules(merged, Granularity::PerComponent, *src);
  const auto* info = plan.info_for(component.name);

  // Live modules exported types, for spotting a plan that would regroup them.
  std::map<TypeKey, std::string> live_owner;
  for (const auto& [label, id] : arch.module_by_label) {
    if (!label.starts_with("itf(") && !label.starts_with("shared(")) continue;
    if (const auto rm = arch.mgr->resource(id))
      for (const auto& [n, e] : rm->exports) live_owner[e.key()] = label;
  }

  std::vector<ModuleId> created;
  std::vector<PlannedResource> new_resources;
  std::optional<ComponentId> added;
  try {
    std::map<std::string, ModuleId> ids;
    std::set<std::string> needed;
    for (const auto& [name, label] : info->wiring) needed.insert(label);
    for (const auto& label : needed) {
      if (const auto live = arch.module_by_label.find(label);
          live != arch.module_by_label.end() && arch.mgr->is_live(live->second)) {
        ids[label] = live->second;
        continue;
      }
      const auto* r = plan.find_resource(label);
      if (r->role != ModuleRole::Implementation) {
        for (const auto& e : r->exports)
          if (const auto o = live_owner.find(e.key()); o != live_owner.end())
            throw Error(ErrorCode::InvalidArgument,
                        "adding " + component.name + " would move " + e.key().str() + " out of " + o->second,
                        {component.name, e.key().str()});
      }
      const auto id = arch.mgr->create_resource_module(r->exports, src, r->label);
      created.push_back(id);
      ids[label] = id;
      new_resources.push_back(*r);
    }
    std::vector<ModuleId> candidates;
    for (const auto& [label, id] : ids) candidates.push_back(id);
    const auto info_id = arch.mgr->create_info_module(info->imports, candidates, info->label);
    created.push_back(info_id);

    std::vector<PortSpec> specs;
    for (const auto& i : component.interfaces) {
      const auto imp = std::find_if(info->imports.begin(), info->imports.end(),
                                    [&](const ImportDecl& d) { return d.name == i.signature; });
      specs.push_back(PortSpec{i.name, i.role, i.signature, imp->version});
    }
    auto content = arch.mgr->load_type(info_id, component.content.class_name);
    added = arch.assembly.new_primitive(component.name, std::move(specs), std::move(content), info_id, *arch.mgr);
    arch.assembly.add_child(arch.root, *added);

    for (const auto& r : new_resources) {
      arch.module_by_label[r.label] = ids.at(r.label);
      if (r.role == ModuleRole::Implementation) arch.owned_modules[component.name].push_back(ids.at(r.label));
      arch.plan.resources.push_back(r);
    }
    arch.module_by_label[info->label] = info_id;
    arch.plan.infos.push_back(*info);
    arch.def.components.push_back(component);
    return *added;
  } catch (...) {
    if (added) {
      try {
        arch.assembly.erase(*added);
      } catch (const Error&) {
      }
    }
    for (auto it = created.rbegin(); it != created.rend(); ++it) {
      try {
        arch.mgr->remove_module(*it, true);
      } catch (const Error&) {
      }
    }
    throw;
  }
}

void remove_component(Architecture& arch, std::string_view component) {
  guard_reconfig(arch, "remove");
  const auto id = arch.component(component);
  if (id == arch.root) throw Error(ErrorCode::InvalidArgument, "the root composite cannot be removed");
  const auto c = arch.assembly.get(id);
  if (c.kind != ComponentKind::Primitive)
    throw Error(ErrorCode::InvalidArgument, c.name + " is a composite", {c.name});
  if (const auto bound = arch.assembly.bindings_of(id); !bound.empty()) {
    std::vector<std::string> names;
    for (const auto& b : bound) {
      const auto* rec = arch.assembly.binding(b);
      names.push_back(arch.assembly.port_name(rec->client) + "->" + arch.assembly.port_name(rec->server));
    }
    throw Error(ErrorCode::CrossBindingExists, c.name + " still has " + std::to_string(names.size()) + " binding(s)",
                names);
  }
  if (c.parents.size() != 1 || !c.parents.contains(arch.root))
    throw Error(ErrorCode::InvalidArgument, c.name + " is not a direct child of the root only", {c.name});

  arch.assembly.remove_child(arch.root, id);
  arch.assembly.erase(id);

  const auto forget = [&](ModuleId m) {
    for (auto it = arch.module_by_label.begin(); it != arch.module_by_label.end();) {
      if (it->second == m) it = arch.module_by_label.erase(it);
      else ++it;
    }
  };
  if (arch.granularity() == Granularity::PerComponent) {
    arch.mgr->remove_module(c.info_module, false);
    forget(c.info_module);
    for (const auto& m : arch.owned_modules[c.name]) {
      if (arch.mgr->is_live(m) && arch.mgr->dependents(m).empty()) {
        arch.mgr->remove_module(m, false);
        forget(m);
      }
    }
  }
  arch.owned_modules.erase(c.name);
  std::erase_if(arch.def.components, [&](const AdlComponent& a) { return a.name == c.name; });
}

BenchEntry default_bench_entry(Architecture& arch) {
  const auto try_component = [&](const ComponentInstance& c) -> std::optional<BenchEntry> {
    for (const auto& p : c.interfaces) {
      if (p.role != Role::Server) continue;
      const auto sig = arch.mgr->load_type(c.info_module, p.signature);
      if (!sig.def().methods.empty()) return BenchEntry{c.name, p.name, sig.def().methods.front().name};
    }
    return std::nullopt;
  };
  if (auto e = try_component(arch.assembly.get(arch.root))) return *e;
  for (const auto& [id, c] : arch.assembly.components())
    if (auto e = try_component(c)) return *e;
  throw Error(ErrorCode::InvalidArgument, "architecture has no server port with methods to benchmark");
}

std::string BenchReport::str() const {
  std::ostringstream out;
  out << "calls: " << calls << '\n'
      << "bookkeeping_ops: " << bookkeeping_ops << '\n'
      << "ops_per_call: " << ops_per_call << '\n'
      << "with_interceptor_ns: " << with_interceptor_time.count() << '\n'
      << "without_interceptor_ns: " << without_interceptor_time.count() << '\n';
  return out.str();
}

BenchReport bench_interception(Architecture& arch, std::uint64_t calls, const std::optional<BenchEntry>& entry) {
  if (calls == 0) throw Error(ErrorCode::InvalidArgument, "bench needs at least one call", {"0"});
  const auto target = entry ? *entry : default_bench_entry(arch);

  const auto& c = arch.assembly.get(arch.component(target.component));
  const auto* p = c.find_port(target.port);
  if (!p) throw Error(ErrorCode::UnknownPort, c.name + " has no port '" + target.port + "'", {c.name, target.port});
  const auto sig = arch.mgr->load_type(c.info_module, p->signature);
  const auto* m = sig.def().find_method(target.method);
  if (!m)
    throw Error(ErrorCode::UnknownMethod, p->signature + " has no method '" + target.method + "'",
                {p->signature, target.method});
  std::vector<Value> args;
  for (const auto& t : m->params) args.push_back(make_value(arch, target.component, t));

  struct Restore {
    Architecture& a;
    bool trace, intercept;
    ~Restore() {
      a.record_trace = trace;
      a.intercept = intercept;
    }
  } restore{arch, arch.record_trace, arch.intercept};
  arch.record_trace = false;

  using clock = std::chrono::steady_clock;
  BenchReport report;
  report.calls = calls;

  arch.intercept = true;
  const auto ops_before = arch.bookkeeping_ops;
  const auto t0 = clock::now();
  for (std::uint64_t i = 0; i < calls; ++i) invoke(arch, target.component, target.port, target.method, args);
  const auto t1 = clock::now();
  report.bookkeeping_ops = arch.bookkeeping_ops - ops_before;
  report.ops_per_call = report.bookkeeping_ops / calls;
  report.with_interceptor_time = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0);

  arch.intercept = false;
  const auto t2 = clock::now();
  for (std::uint64_t i = 0; i < calls; ++i) invoke(arch, target.component, target.port, target.method, args);
  const auto t3 = clock::now();
  report.without_interceptor_time = std::chrono::duration_cast<std::chrono::nanoseconds>(t3 - t2);
  return report;
}

} // namespace reconfig
