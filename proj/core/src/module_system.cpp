#include "reconfig/module_system.hpp"

#include <algorithm>
#include <sstream>

namespace reconfig {
namespace {

std::string ids_str(const std::vector<ModuleId>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id.str();
  }
  return out;
}

std::vector<std::string> ids_details(const std::vector<ModuleId>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

} // namespace

DefinedType::DefinedType(std::string name, ModuleId defined_by, TypeDef def)
    : state_(std::make_shared<const State>(State{std::move(name), defined_by, std::move(def)})) {}

bool same_type(const DefinedType& a, const DefinedType& b) noexcept { return a == b; }

ModuleId ModuleManager::next_id() { return ModuleId{++last_id_}; }

void ModuleManager::emit(ModuleEvent event) {
  log_.push_back(event);
  for (const auto& [id, listener] : listeners_) listener(event);
}

ModuleId ModuleManager::create_resource_module(std::vector<ExportDecl> exports,
                                               std::shared_ptr<const CorpusStore> source, std::string label) {
  if (!source) throw Error(ErrorCode::InvalidArgument, "resource module needs a source corpus");
  ResourceModule module;
  for (auto& e : exports) {
    if (module.exports.contains(e.name))
      throw Error(ErrorCode::DuplicateExport, "module exports '" + e.name + "' more than once",
                  {e.name, module.exports.at(e.name).version.str(), e.version.str()});
    if (!source->find(e.key()))
      throw Error(ErrorCode::UnresolvableExport, "export " + e.key().str() + " not found in source",
                  {e.name, e.version.str()});
    auto name = e.name;
    module.exports.emplace(std::move(name), std::move(e));
  }
  module.source = std::move(source);
  module.label = std::move(label);

  std::lock_guard lock(mutex_);
  module.id = next_id();
  const auto id = module.id;
  modules_.emplace(id, std::move(module));
  emit({ModuleEvent::Kind::Added, id});
  return id;
}

ModuleId ModuleManager::resolve_import(const ImportDecl& import,
                                       const std::optional<std::vector<ModuleId>>& candidates) const {
  std::vector<ModuleId> pool;
  if (candidates) {
    for (const auto& id : *candidates) {
      const auto it = modules_.find(id);
      if (it == modules_.end())
        throw Error(ErrorCode::UnknownModule, "candidate " + id.str() + " is not live", {id.str()});
      if (!std::holds_alternative<ResourceModule>(it->second))
        throw Error(ErrorCode::WrongModuleKind, "candidate " + id.str() + " is not a resource module", {id.str()});
      pool.push_back(id);
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  } else {
    for (const auto& [id, m] : modules_)
      if (std::holds_alternative<ResourceModule>(m)) pool.push_back(id);
  }

  std::vector<ModuleId> matches;
  for (const auto& id : pool) {
    const auto& rm = std::get<ResourceModule>(modules_.at(id));
    const auto e = rm.exports.find(import.name);
    if (e != rm.exports.end() && e->second.version == import.version) matches.push_back(id);
  }
  if (matches.empty())
    throw Error(ErrorCode::MissingImport, "no live module exports " + import.key().str(),
                {import.name, import.version.str()});
  if (matches.size() > 1) {
    auto details = ids_details(matches);
    details.insert(details.begin(), {import.name, import.version.str()});
    throw Error(ErrorCode::AmbiguousImport,
                import.key().str() + " is exported by several modules (" + ids_str(matches) + ")",
                std::move(details));
  }
  return matches.front();
}

ModuleId ModuleManager::create_info_module(std::vector<ImportDecl> imports,
                                           std::optional<std::vector<ModuleId>> candidates, std::string label) {
  InfoModule module;
  for (auto& i : imports) {
    if (module.imports.contains(i.name))
      throw Error(ErrorCode::DuplicateImport, "module imports '" + i.name + "' more than once",
                  {i.name, module.imports.at(i.name).version.str(), i.version.str()});
    auto name = i.name;
    module.imports.emplace(std::move(name), std::move(i));
  }
  module.label = std::move(label);

  std::lock_guard lock(mutex_);
  for (const auto& [name, import] : module.imports) module.wiring.emplace(name, resolve_import(import, candidates));
  module.id = next_id();
  const auto id = module.id;
  modules_.emplace(id, std::move(module));
  emit({ModuleEvent::Kind::Added, id});
  return id;
}

void ModuleManager::rewire_import(ModuleId info_id, std::string_view old_name, ImportDecl replacement,
                                  std::optional<std::vector<ModuleId>> candidates) {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(info_id);
  if (it == modules_.end()) throw Error(ErrorCode::UnknownModule, info_id.str() + " is not live", {info_id.str()});
  auto* info = std::get_if<InfoModule>(&it->second);
  if (!info) throw Error(ErrorCode::WrongModuleKind, info_id.str() + " is not an info module", {info_id.str()});

  const std::string old_key(old_name);
  if (!info->imports.contains(old_key))
    throw Error(ErrorCode::NotImported, info_id.str() + " does not import '" + old_key + "'", {old_key});
  if (replacement.name != old_key && info->imports.contains(replacement.name))
    throw Error(ErrorCode::DuplicateImport, info_id.str() + " already imports '" + replacement.name + "'",
                {replacement.name});

  const auto provider = resolve_import(replacement, candidates);
  info->imports.erase(old_key);
  info->wiring.erase(old_key);
  info->invalidated.erase(old_key);
  info->wiring[replacement.name] = provider;
  auto name = replacement.name;
  info->imports.emplace(std::move(name), std::move(replacement));
}

DefinedType ModuleManager::load_type(ModuleId via, std::string_view name) {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(via);
  if (it == modules_.end()) throw Error(ErrorCode::UnknownModule, via.str() + " is not live", {via.str()});
  const auto* info = std::get_if<InfoModule>(&it->second);
  if (!info) throw Error(ErrorCode::WrongModuleKind, via.str() + " is not an info module", {via.str()});

  const std::string key(name);
  if (info->invalidated.contains(key))
    throw Error(ErrorCode::InvalidatedImport, "provider of '" + key + "' for " + via.str() + " was removed",
                {key, via.str()});
  const auto wire = info->wiring.find(key);
  if (wire == info->wiring.end())
    throw Error(ErrorCode::NotImported, via.str() + " does not import '" + key + "'", {key, via.str()});

  auto& provider = std::get<ResourceModule>(modules_.at(wire->second));
  if (const auto cached = provider.defined.find(key); cached != provider.defined.end()) return cached->second;

  const auto& decl = provider.exports.at(key);
  const auto* def = provider.source->find(decl.key());
  if (!def)
    throw Error(ErrorCode::NotFound, "source of " + provider.id.str() + " lost " + decl.key().str(),
                {decl.name, decl.version.str()});
  DefinedType defined(key, provider.id, *def);
  provider.defined.emplace(key, defined);
  return defined;
}

std::vector<ModuleId> ModuleManager::dependents_locked(ModuleId id) const {
  std::vector<ModuleId> out;
  for (const auto& [mid, m] : modules_) {
    const auto* info = std::get_if<InfoModule>(&m);
    if (!info) continue;
    for (const auto& [name, provider] : info->wiring) {
      if (provider == id) {
        out.push_back(mid);
        break;
      }
    }
  }
  return out;
}

RemovalReport ModuleManager::remove_module(ModuleId id, bool force) {
  std::lock_guard lock(mutex_);
  if (!modules_.contains(id)) throw Error(ErrorCode::UnknownModule, id.str() + " is not live", {id.str()});

  auto deps = dependents_locked(id);
  if (!deps.empty() && !force)
    throw Error(ErrorCode::InUse, id.str() + " is wired by " + ids_str(deps), ids_details(deps));

  for (const auto& dep : deps) {
    auto& info = std::get<InfoModule>(modules_.at(dep));
    for (auto w = info.wiring.begin(); w != info.wiring.end();) {
      if (w->second == id) {
        info.invalidated.insert(w->first);
        w = info.wiring.erase(w);
      } else {
        ++w;
      }
    }
  }
  modules_.erase(id);
  emit({ModuleEvent::Kind::Removed, id});
  return RemovalReport{id, std::move(deps)};
}

SubscriptionId ModuleManager::subscribe(Listener listener) {
  std::lock_guard lock(mutex_);
  const auto id = ++last_subscription_;
  listeners_.emplace(id, std::move(listener));
  return id;
}

void ModuleManager::unsubscribe(SubscriptionId id) {
  std::lock_guard lock(mutex_);
  listeners_.erase(id);
}

bool ModuleManager::is_live(ModuleId id) const {
  std::lock_guard lock(mutex_);
  return modules_.contains(id);
}

bool ModuleManager::is_resource(ModuleId id) const {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(id);
  return it != modules_.end() && std::holds_alternative<ResourceModule>(it->second);
}

bool ModuleManager::is_info(ModuleId id) const {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(id);
  return it != modules_.end() && std::holds_alternative<InfoModule>(it->second);
}

std::set<ModuleId> ModuleManager::live_modules() const {
  std::lock_guard lock(mutex_);
  std::set<ModuleId> out;
  for (const auto& [id, m] : modules_) out.insert(id);
  return out;
}

std::vector<ModuleEvent> ModuleManager::event_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::optional<ResourceModule> ModuleManager::resource(ModuleId id) const {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(id);
  if (it == modules_.end()) return std::nullopt;
  if (const auto* rm = std::get_if<ResourceModule>(&it->second)) return *rm;
  return std::nullopt;
}

std::optional<InfoModule> ModuleManager::info(ModuleId id) const {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(id);
  if (it == modules_.end()) return std::nullopt;
  if (const auto* im = std::get_if<InfoModule>(&it->second)) return *im;
  return std::nullopt;
}

std::vector<ModuleId> ModuleManager::resource_modules() const {
  std::lock_guard lock(mutex_);
  std::vector<ModuleId> out;
  for (const auto& [id, m] : modules_)
    if (std::holds_alternative<ResourceModule>(m)) out.push_back(id);
  return out;
}

std::vector<ModuleId> ModuleManager::info_modules() const {
  std::lock_guard lock(mutex_);
  std::vector<ModuleId> out;
  for (const auto& [id, m] : modules_)
    if (std::holds_alternative<InfoModule>(m)) out.push_back(id);
  return out;
}

std::vector<ModuleId> ModuleManager::dependents(ModuleId id) const {
  std::lock_guard lock(mutex_);
  return dependents_locked(id);
}

std::string ModuleManager::label(ModuleId id) const {
  std::lock_guard lock(mutex_);
  const auto it = modules_.find(id);
  if (it == modules_.end()) return {};
  return std::visit([](const auto& m) { return m.label; }, it->second);
}

std::string ModuleManager::report(const std::function<std::string(ModuleId)>& name_of) const {
  const auto name = [&](ModuleId id) { return name_of ? name_of(id) : id.str(); };
  std::lock_guard lock(mutex_);
  std::ostringstream out;
  for (const auto& [id, m] : modules_) {
    if (const auto* rm = std::get_if<ResourceModule>(&m)) {
      out << "resource " << name(id) << " [" << rm->label << "] exports";
      for (const auto& [n, e] : rm->exports) out << ' ' << e.key().str();
    } else {
      const auto& im = std::get<InfoModule>(m);
      out << "info " << name(id) << " [" << im.label << "] wiring";
      for (const auto& [n, provider] : im.wiring) out << ' ' << im.imports.at(n).key().str() << "->" << name(provider);
      for (const auto& n : im.invalidated) out << ' ' << n << "->(removed)";
    }
    out << '\n';
  }
  return out.str();
}

std::set<ModuleId> replay_live_set(std::span<const ModuleEvent> log) {
  std::set<ModuleId> live;
  for (const auto& e : log) {
    if (e.kind == ModuleEvent::Kind::Added) live.insert(e.id);
    else live.erase(e.id);
  }
  return live;
}

} // namespace reconfig
