#include "reconfig/factory.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace reconfig {
namespace {

struct Unit {
  std::string name;
  std::vector<TypeKey> sigs;
  std::optional<TypeKey> content;
  std::vector<TypeKey> files;
};

std::vector<TypeRef> refs_of(const std::vector<TypeKey>& keys) {
  std::vector<TypeRef> out;
  for (const auto& k : keys) out.push_back(k.ref());
  return out;
}

std::string join_keys(const std::vector<TypeKey>& keys, std::string_view sep) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += sep;
    out += k.str();
  }
  return out;
}

[[noreturn]] void version_conflict(const std::string& where, const std::string& name, const VersionTag& a,
                                   const VersionTag& b) {
  throw Error(ErrorCode::VersionConflict,
              where + " would need both " + name + "@" + a.str() + " and " + name + "@" + b.str(),
              {name, a.str(), b.str()});
}

void check_unique_names(const std::set<TypeKey>& keys, const std::string& where) {
  const TypeKey* prev = nullptr;
  for (const auto& k : keys) {
    if (prev && prev->name == k.name) version_conflict(where, k.name, prev->version, k.version);
    prev = &k;
  }
}

std::vector<Unit> collect_units(const AdlDefinition& def, const CorpusStore& corpus) {
  std::vector<Unit> units;
  Unit root{def.name, {}, std::nullopt, {}};
  for (const auto& i : def.interfaces) root.sigs.push_back(corpus.resolve(TypeRef{i.signature, i.version}));
  units.push_back(std::move(root));
  for (const auto& c : def.components) {
    Unit u{c.name, {}, corpus.resolve(c.content.ref()), {}};
    for (const auto& i : c.interfaces) u.sigs.push_back(corpus.resolve(TypeRef{i.signature, i.version}));
    for (const auto& f : c.files) u.files.push_back(corpus.resolve(f.ref()));
    units.push_back(std::move(u));
  }
  return units;
}

/// Everything a unit can name: content, signatures, shared files and what
/// they reach.
std::set<TypeKey> unit_closure(const Unit& u, const CorpusStore& corpus) {
  std::vector<TypeRef> roots = refs_of(u.sigs);
  for (const auto& f : u.files) roots.push_back(f.ref());
  if (u.content) roots.push_back(u.content->ref());
  return corpus.closure(roots);
}

struct UnionFind {
  std::map<TypeKey, TypeKey> parent;

  const TypeKey& find(const TypeKey& k) {
    auto it = parent.try_emplace(k, k).first;
    if (it->second == k) return it->first;
    const auto root = find(it->second);
    it->second = root;
    return parent.find(root)->first;
  }
  void unite(const TypeKey& a, const TypeKey& b) {
    const auto ra = find(a);
    const auto rb = find(b);
    if (ra == rb) return;
    // Smaller key becomes the representative, so grouping is order-free.
    if (ra < rb) parent[rb] = ra;
    else parent[ra] = rb;
  }
};

ModulePlan plan_single(const std::vector<Unit>& units, const CorpusStore& corpus) {
  std::set<TypeKey> all;
  std::vector<std::string> names;
  for (const auto& u : units) {
    const auto c = unit_closure(u, corpus);
    all.insert(c.begin(), c.end());
    names.push_back(u.name);
  }
  check_unique_names(all, "a single loader");
  std::sort(names.begin(), names.end());

  ModulePlan plan;
  plan.granularity = Granularity::SingleLoader;
  PlannedResource everything{"all", ModuleRole::Everything, {}, {}};
  PlannedInfo info;
  info.label = "info(*)";
  info.components = names;
  for (const auto& k : all) {
    everything.exports.push_back(ExportDecl{k.name, k.version});
    info.imports.push_back(ImportDecl{k.name, k.version});
    info.wiring[k.name] = everything.label;
  }
  plan.resources.push_back(std::move(everything));
  plan.infos.push_back(std::move(info));
  return plan;
}

ModulePlan plan_per_component(const AdlDefinition& def, const std::vector<Unit>& units, const CorpusStore& corpus) {
  std::set<TypeKey> sigs;
  for (const auto& u : units) sigs.insert(u.sigs.begin(), u.sigs.end());

  // Shared groups.
  UnionFind uf;
  std::set<TypeKey> shared;
  for (const auto& u : units) {
    if (u.files.empty()) continue;
    const auto reach = corpus.closure(refs_of(u.files));
    std::optional<TypeKey> first;
    for (const auto& k : reach) {
      if (sigs.contains(k)) continue;
      shared.insert(k);
      uf.find(k);
      if (first) uf.unite(*first, k);
      else first = k;
    }
  }
  std::map<TypeKey, std::vector<TypeKey>> groups;
  for (const auto& k : shared) groups[uf.find(k)].push_back(k);

  std::map<TypeKey, std::string> owner;
  std::map<std::string, PlannedResource> resources;

  for (const auto& [rep, members] : groups) {
    PlannedResource r{"shared(" + join_keys(members, ",") + ")", ModuleRole::Shared, {}, {}};
    for (const auto& k : members) {
      owner[k] = r.label;
      r.exports.push_back(ExportDecl{k.name, k.version});
    }
    resources.emplace(r.label, std::move(r));
  }

  for (const auto& k : sigs) {
    PlannedResource r{"itf(" + k.str() + ")", ModuleRole::Interface, {}, {ExportDecl{k.name, k.version}}};
    owner[k] = r.label;
    resources.emplace(r.label, std::move(r));
  }
  for (const auto& k : sigs) {
    const std::vector<TypeRef> root{k.ref()};
    for (const auto& t : corpus.closure(root)) {
      if (owner.contains(t)) continue;
      owner[t] = "itf(" + k.str() + ")";
      resources.at(owner[t]).exports.push_back(ExportDecl{t.name, t.version});
    }
  }

  std::map<std::string, int> content_uses;
  for (const auto& u : units)
    if (u.content) ++content_uses[u.content->str()];

  ModulePlan plan;
  plan.granularity = Granularity::PerComponent;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const bool is_root = i == 0;
    if (is_root && def.interfaces.empty()) continue;

    const auto reach = unit_closure(u, corpus);
    check_unique_names(reach, "component '" + u.name + "'");

    PlannedInfo info;
    info.label = "info(" + u.name + ")";
    info.components = {u.name};
    std::optional<PlannedResource> impl;
    if (u.content) {
      std::string label = "impl(" + u.content->str() + ")";
      if (content_uses[u.content->str()] > 1) label += "#" + u.name;
      impl = PlannedResource{label, ModuleRole::Implementation, u.name, {}};
    }
    for (const auto& k : reach) {
      info.imports.push_back(ImportDecl{k.name, k.version});
      if (const auto o = owner.find(k); o != owner.end()) {
        info.wiring[k.name] = o->second;
      } else {
        // Only content closures reach unowned types, and those have an impl.
        impl->exports.push_back(ExportDecl{k.name, k.version});
        info.wiring[k.name] = impl->label;
      }
    }
    if (impl) resources.emplace(impl->label, std::move(*impl));
    plan.infos.push_back(std::move(info));
  }

  for (auto& [label, r] : resources) {
    std::set<TypeKey> keys;
    for (const auto& e : r.exports) keys.insert(e.key());
    check_unique_names(keys, "module " + label);
    std::sort(r.exports.begin(), r.exports.end());
    plan.resources.push_back(std::move(r));
  }
  return plan;
}

std::string loc_suffix(const SourceLoc& loc) { return loc.line ? " at " + loc.str() : std::string(); }

} // namespace

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::SingleLoader ? "single" : "per-component";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "single") return Granularity::SingleLoader;
  if (text == "per-component") return Granularity::PerComponent;
  if (text == "selective")
    throw Error(ErrorCode::NotImplemented, "selective per-component reconfigurability is not available", {"selective"});
  throw Error(ErrorCode::InvalidArgument, "unknown granularity '" + std::string(text) + "'", {std::string(text)});
}

const PlannedResource* ModulePlan::find_resource(std::string_view label) const noexcept {
  for (const auto& r : resources)
    if (r.label == label) return &r;
  return nullptr;
}

const PlannedInfo* ModulePlan::info_for(std::string_view component) const noexcept {
  for (const auto& i : infos)
    if (std::find(i.components.begin(), i.components.end(), component) != i.components.end()) return &i;
  return nullptr;
}

std::string ModulePlan::report() const {
  std::vector<std::string> res_lines;
  for (const auto& r : resources) {
    std::string line = "RESOURCE " + r.label + ":";
    for (std::size_t i = 0; i < r.exports.size(); ++i) line += (i ? ", " : " ") + r.exports[i].key().str();
    res_lines.push_back(std::move(line));
  }
  std::vector<std::string> info_lines;
  for (const auto& info : infos) {
    std::string names;
    for (const auto& c : info.components) names += (names.empty() ? "" : ",") + c;
    std::string imports, wired;
    for (const auto& imp : info.imports) {
      imports += (imports.empty() ? "" : ", ") + imp.key().str();
      wired += (wired.empty() ? "" : ", ") + info.wiring.at(imp.name);
    }
    info_lines.push_back("INFO " + names + ": imports " + (imports.empty() ? "-" : imports) + " wired-to " +
                         (wired.empty() ? "-" : wired));
  }
  std::sort(res_lines.begin(), res_lines.end());
  std::sort(info_lines.begin(), info_lines.end());
  std::string out;
  for (const auto& l : res_lines) out += l + "\n";
  for (const auto& l : info_lines) out += l + "\n";
  return out;
}

ModulePlan plan_modules(const AdlDefinition& def, Granularity granularity, const CorpusStore& corpus) {
  const auto diags = validate(def, corpus);
  if (!diags.empty()) {
    std::vector<std::string> lines;
    for (const auto& d : diags) lines.push_back(d.str());
    throw Error(ErrorCode::InvalidDefinition,
                "definition " + def.name + " has " + std::to_string(diags.size()) + " diagnostic(s); first: " +
                    lines.front(),
                lines);
  }
  const auto units = collect_units(def, corpus);
  return granularity == Granularity::SingleLoader ? plan_single(units, corpus)
                                                  : plan_per_component(def, units, corpus);
}

std::string TraceEvent::str() const {
  std::string out = std::to_string(seq) + " ";
  switch (kind) {
  case Kind::Enter: return out + "ENTER " + component + " " + module.str();
  case Kind::Exit: return out + "EXIT " + component;
  case Kind::Check: return out + "CHECK " + type_name + " " + (ok ? "ok" : "mismatch");
  case Kind::Swap: return out + "SWAP " + component + " " + old_content + " " + new_content;
  }
  return out;
}

ComponentId Architecture::component(std::string_view name) const {
  if (auto id = assembly.find(name)) return *id;
  throw Error(ErrorCode::UnknownComponent, "no component named '" + std::string(name) + "'", {std::string(name)});
}

PortRef Architecture::endpoint(const AdlEndpoint& ep) const {
  return PortRef{ep.is_this() ? root : component(ep.component), ep.port};
}

std::string Architecture::report() const {
  return "granularity " + std::string(to_string(granularity())) + "\n" + assembly.report() + mgr->report();
}

std::string Architecture::trace_text() const {
  std::string out;
  for (const auto& e : trace) out += e.str() + "\n";
  return out;
}

std::unique_ptr<Architecture> instantiate(const AdlDefinition& def, const ModulePlan& plan,
                                          std::shared_ptr<ModuleManager> mgr,
                                          std::shared_ptr<const CorpusStore> corpus) {
  auto arch = std::make_unique<Architecture>();
  arch->mgr = mgr;
  arch->corpus = corpus;
  arch->def = def;
  arch->plan = plan;

  std::vector<ModuleId> created;
  try {
    for (const auto& r : plan.resources) {
      const auto id = mgr->create_resource_module(r.exports, corpus, r.label);
      created.push_back(id);
      arch->module_by_label[r.label] = id;
      if (r.role == ModuleRole::Implementation) arch->owned_modules[r.owner].push_back(id);
    }

    std::map<std::string, ModuleId> info_of;
    for (const auto& info : plan.infos) {
      std::vector<ModuleId> candidates;
      for (const auto& [name, label] : info.wiring) candidates.push_back(arch->module_by_label.at(label));
      const auto id = mgr->create_info_module(info.imports, candidates, info.label);
      created.push_back(id);
      arch->module_by_label[info.label] = id;
      for (const auto& c : info.components) info_of[c] = id;
    }

    const auto ports_of = [&](const std::vector<AdlInterface>& itfs, const std::string& owner) {
      const auto* info = plan.info_for(owner);
      std::vector<PortSpec> specs;
      for (const auto& i : itfs) {
        const auto imp = std::find_if(info->imports.begin(), info->imports.end(),
                                      [&](const ImportDecl& d) { return d.name == i.signature; });
        if (imp == info->imports.end())
          throw Error(ErrorCode::NotImported, info->label + " does not import '" + i.signature + "'", {i.signature});
        specs.push_back(PortSpec{i.name, i.role, i.signature, imp->version});
      }
      return specs;
    };

    std::vector<ComponentId> children;
    for (const auto& c : def.components) {
      try {
        const auto info = info_of.at(c.name);
        auto content = mgr->load_type(info, c.content.class_name);
        children.push_back(arch->assembly.new_primitive(c.name, ports_of(c.interfaces, c.name), std::move(content),
                                                        info, *mgr));
      } catch (Error& e) {
        e.with_context("component '" + c.name + "'" + loc_suffix(c.loc));
        throw;
      }
    }
    if (children.empty())
      throw Error(ErrorCode::EmptyComposite, "definition " + def.name + " declares no components", {def.name});

    const auto root_info = def.interfaces.empty() ? ModuleId{} : info_of.at(def.name);
    auto root_ports = def.interfaces.empty() ? std::vector<PortSpec>{} : ports_of(def.interfaces, def.name);
    try {
      arch->root = arch->assembly.new_composite(def.name, std::move(root_ports), children, root_info);
    } catch (Error& e) {
      e.with_context("definition '" + def.name + "'" + loc_suffix(def.loc));
      throw;
    }

    for (const auto& b : def.bindings) {
      try {
        arch->assembly.bind(arch->endpoint(b.client), arch->endpoint(b.server), *mgr);
      } catch (Error& e) {
        e.with_context("binding " + b.client.str() + " -> " + b.server.str() + loc_suffix(b.loc));
        throw;
      }
    }
  } catch (...) {
    for (auto it = created.rbegin(); it != created.rend(); ++it) {
      try {
        mgr->remove_module(*it, true);
      } catch (const Error&) {
      }
    }
    throw;
  }
  return arch;
}

std::unique_ptr<Architecture> build_architecture(const AdlDefinition& def, Granularity granularity,
                                                 std::shared_ptr<ModuleManager> mgr,
                                                 std::shared_ptr<const CorpusStore> corpus) {
  const auto plan = plan_modules(def, granularity, *corpus);
  return instantiate(def, plan, std::move(mgr), std::move(corpus));
}

} // namespace reconfig
