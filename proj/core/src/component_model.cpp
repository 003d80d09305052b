#include "reconfig/component_model.hpp"

#include <algorithm>
#include <sstream>

namespace reconfig {

std::string_view to_string(Role role) noexcept { return role == Role::Client ? "client" : "server"; }

std::string_view to_string(BindingScope scope) noexcept {
  switch (scope) {
  case BindingScope::Sibling: return "sibling";
  case BindingScope::Export: return "export";
  case BindingScope::Import: return "import";
  }
  return "?";
}

const InterfacePort* ComponentInstance::find_port(std::string_view port) const noexcept {
  for (const auto& p : interfaces)
    if (p.name == port) return &p;
  return nullptr;
}

std::optional<std::string> find_missing_method(const TypeDef& signature, const TypeDef& content) {
  for (const auto& wanted : signature.methods) {
    const auto* have = content.find_method(wanted.name);
    if (!have || have->params != wanted.params) return wanted.name;
  }
  return std::nullopt;
}

ComponentId Assembly::add(ComponentInstance instance) {
  if (!is_identifier(instance.name) || instance.name == "this")
    throw Error(ErrorCode::InvalidName, "invalid component name '" + instance.name + "'", {instance.name});
  if (find(instance.name))
    throw Error(ErrorCode::DuplicateName, "component '" + instance.name + "' already exists", {instance.name});
  const auto id = instance.id;
  components_.emplace(id, std::move(instance));
  return id;
}

std::vector<InterfacePort> Assembly::make_ports(std::vector<PortSpec> specs, ComponentId owner) const {
  std::vector<InterfacePort> ports;
  std::set<std::string> seen;
  for (auto& s : specs) {
    if (!is_identifier(s.name)) throw Error(ErrorCode::InvalidName, "invalid port name '" + s.name + "'", {s.name});
    if (!is_type_name(s.signature))
      throw Error(ErrorCode::InvalidName, "invalid signature '" + s.signature + "'", {s.signature});
    if (!seen.insert(s.name).second)
      throw Error(ErrorCode::DuplicateName, "port '" + s.name + "' declared twice", {s.name});
    ports.push_back(InterfacePort{std::move(s.name), s.role, std::move(s.signature), std::move(s.version), owner});
  }
  return ports;
}

ComponentId Assembly::new_primitive(std::string name, std::vector<PortSpec> interfaces, DefinedType content,
                                    ModuleId info_module, ModuleManager& mgr) {
  if (content.def().kind != TypeKind::Class)
    throw Error(ErrorCode::ContentNotAClass, content.name() + " is an interface, not a class", {content.name()});

  ComponentInstance instance;
  instance.id = ComponentId{last_component_ + 1};
  instance.name = std::move(name);
  instance.kind = ComponentKind::Primitive;
  instance.interfaces = make_ports(std::move(interfaces), instance.id);
  instance.info_module = info_module;

  for (const auto& port : instance.interfaces) {
    const auto sig = mgr.load_type(info_module, port.signature);
    if (sig.def().kind != TypeKind::Interface)
      throw Error(ErrorCode::NotAnInterface, "signature " + port.signature + " of port " + port.name +
                                                 " is not an interface", {port.signature});
    if (sig.def().version != port.version)
      throw Error(ErrorCode::VersionConflict,
                  "port " + port.name + " declares " + port.signature + "@" + port.version.str() + " but " +
                      info_module.str() + " wires version " + sig.def().version.str(),
                  {port.signature, port.version.str(), sig.def().version.str()});
    if (port.role != Role::Server) continue;
    if (auto missing = find_missing_method(sig.def(), content.def()))
      throw Error(ErrorCode::MissingMethod,
                  content.name() + " does not implement " + port.signature + "." + *missing,
                  {port.signature, *missing});
  }

  instance.content = std::move(content);
  ++last_component_;
  return add(std::move(instance));
}

ComponentId Assembly::new_composite(std::string name, std::vector<PortSpec> interfaces,
                                    std::vector<ComponentId> children, ModuleId info_module) {
  if (children.empty())
    throw Error(ErrorCode::EmptyComposite, "composite '" + name + "' needs at least one child", {name});
  for (const auto& c : children) get(c);

  ComponentInstance instance;
  instance.id = ComponentId{last_component_ + 1};
  instance.name = std::move(name);
  instance.kind = ComponentKind::Composite;
  instance.interfaces = make_ports(std::move(interfaces), instance.id);
  instance.info_module = info_module;
  instance.children.insert(children.begin(), children.end());

  ++last_component_;
  const auto id = add(std::move(instance));
  for (const auto& c : children) components_.at(c).parents.insert(id);
  return id;
}

const ComponentInstance& Assembly::get(ComponentId id) const {
  const auto it = components_.find(id);
  if (it == components_.end())
    throw Error(ErrorCode::UnknownComponent, "no component #" + std::to_string(id.value), {std::to_string(id.value)});
  return it->second;
}

std::optional<ComponentId> Assembly::find(std::string_view name) const noexcept {
  for (const auto& [id, c] : components_)
    if (c.name == name) return id;
  return std::nullopt;
}

const InterfacePort& Assembly::port(const PortRef& ref) const {
  const auto& c = get(ref.owner);
  const auto* p = c.find_port(ref.port);
  if (!p) throw Error(ErrorCode::UnknownPort, c.name + " has no port '" + ref.port + "'", {c.name, ref.port});
  return *p;
}

std::string Assembly::port_name(const PortRef& ref) const {
  const auto it = components_.find(ref.owner);
  return (it == components_.end() ? std::string("?") : it->second.name) + "." + ref.port;
}

std::optional<BindingScope> Assembly::classify(const InterfacePort& client, const InterfacePort& server) const {
  const auto& client_owner = get(client.owner);
  const auto& server_owner = get(server.owner);
  if (client.role == Role::Client && server.role == Role::Server) return BindingScope::Sibling;
  if (client.role == Role::Server && server.role == Role::Server && client_owner.kind == ComponentKind::Composite &&
      client_owner.children.contains(server.owner))
    return BindingScope::Export;
  if (client.role == Role::Client && server.role == Role::Client && server_owner.kind == ComponentKind::Composite &&
      server_owner.children.contains(client.owner))
    return BindingScope::Import;
  return std::nullopt;
}

std::optional<Error> Assembly::check_binding(const PortRef& client, const PortRef& server, ModuleManager& mgr) const {
  try {
    const auto& cp = port(client);
    const auto& sp = port(server);
    if (!classify(cp, sp))
      return Error(ErrorCode::RoleError,
                   port_name(client) + " (" + std::string(to_string(cp.role)) + ") cannot bind to " +
                       port_name(server) + " (" + std::string(to_string(sp.role)) + ")",
                   {port_name(client), port_name(server)});

    const auto client_module = get(client.owner).info_module;
    const auto server_module = get(server.owner).info_module;
    const auto ct = mgr.load_type(client_module, cp.signature);
    const auto st = mgr.load_type(server_module, sp.signature);
    if (cp.version != sp.version)
      return Error(ErrorCode::TypeMismatch,
                   port_name(client) + " expects " + cp.signature + "@" + cp.version.str() + " but " +
                       port_name(server) + " provides " + sp.signature + "@" + sp.version.str(),
                   {cp.signature, ct.defined_by().str(), st.defined_by().str()});
    if (!same_type(ct, st))
      return Error(ErrorCode::TypeMismatch,
                   port_name(client) + " sees " + ct.str() + " but " + port_name(server) + " sees " + st.str(),
                   {ct.name(), ct.defined_by().str(), st.defined_by().str()});
    return std::nullopt;
  } catch (const Error& e) {
    return e;
  }
}

const BindingRecord& Assembly::bind(const PortRef& client, const PortRef& server, ModuleManager& mgr,
                                    BindingKind kind) {
  if (kind != BindingKind::Primitive)
    throw Error(ErrorCode::UnsupportedBindingKind, "only primitive bindings are supported");
  if (auto err = check_binding(client, server, mgr)) throw *err;
  if (const auto* existing = binding_from(client))
    throw Error(ErrorCode::AlreadyBound, port_name(client) + " is already bound to " + port_name(existing->server),
                {port_name(client), port_name(existing->server)});
  const auto scope = *classify(port(client), port(server));
  BindingRecord record{BindingId{++last_binding_}, client, server, kind, scope};
  return bindings_.emplace(record.id, record).first->second;
}

void Assembly::unbind(BindingId id) {
  if (!bindings_.erase(id))
    throw Error(ErrorCode::UnknownBinding, "binding #" + std::to_string(id.value) + " is not live",
                {std::to_string(id.value)});
}

bool Assembly::is_descendant(ComponentId node, ComponentId ancestor) const {
  const auto& a = get(ancestor);
  for (const auto& c : a.children)
    if (c == node || is_descendant(node, c)) return true;
  return false;
}

void Assembly::add_child(ComponentId composite, ComponentId child) {
  const auto& parent = get(composite);
  get(child);
  if (parent.kind != ComponentKind::Composite)
    throw Error(ErrorCode::InvalidArgument, parent.name + " is not a composite", {parent.name});
  if (parent.children.contains(child))
    throw Error(ErrorCode::InvalidArgument, get(child).name + " is already a child of " + parent.name);
  if (child == composite || is_descendant(composite, child))
    throw Error(ErrorCode::ContainmentCycle, "adding " + get(child).name + " to " + parent.name + " creates a cycle",
                {get(child).name, parent.name});
  components_.at(composite).children.insert(child);
  components_.at(child).parents.insert(composite);
}

void Assembly::remove_child(ComponentId composite, ComponentId child) {
  const auto& parent = get(composite);
  if (!parent.children.contains(child))
    throw Error(ErrorCode::NotAChild, "component #" + std::to_string(child.value) + " is not a child of " + parent.name,
                {parent.name});

  std::set<ComponentId> inside = parent.children;
  inside.erase(child);
  inside.insert(composite);
  std::vector<std::string> crossing;
  for (const auto& [id, b] : bindings_) {
    const bool touches = b.client.owner == child || b.server.owner == child;
    const auto other = b.client.owner == child ? b.server.owner : b.client.owner;
    if (touches && inside.contains(other))
      crossing.push_back(port_name(b.client) + "->" + port_name(b.server));
  }
  if (!crossing.empty())
    throw Error(ErrorCode::CrossBindingExists,
                get(child).name + " still has " + std::to_string(crossing.size()) + " binding(s) inside " +
                    parent.name,
                crossing);
  if (parent.children.size() == 1)
    throw Error(ErrorCode::EmptyComposite, "removing the last child of " + parent.name, {parent.name});

  components_.at(composite).children.erase(child);
  components_.at(child).parents.erase(composite);
}

void Assembly::erase(ComponentId id) {
  const auto& c = get(id);
  if (!c.parents.empty() || !c.children.empty() || !bindings_of(id).empty())
    throw Error(ErrorCode::InUse, c.name + " is still attached", {c.name});
  components_.erase(id);
}

void Assembly::set_content(ComponentId id, DefinedType content) {
  auto& c = components_.at(get(id).id);
  if (c.kind != ComponentKind::Primitive)
    throw Error(ErrorCode::InvalidArgument, c.name + " is a composite and has no content", {c.name});
  c.content = std::move(content);
}

const BindingRecord* Assembly::binding(BindingId id) const noexcept {
  const auto it = bindings_.find(id);
  return it == bindings_.end() ? nullptr : &it->second;
}

const BindingRecord* Assembly::binding_from(const PortRef& client) const noexcept {
  for (const auto& [id, b] : bindings_)
    if (b.client == client) return &b;
  return nullptr;
}

std::vector<BindingId> Assembly::bindings_of(ComponentId id) const {
  std::vector<BindingId> out;
  for (const auto& [bid, b] : bindings_)
    if (b.client.owner == id || b.server.owner == id) out.push_back(bid);
  return out;
}

std::vector<BindingId> Assembly::broken_bindings(ModuleManager& mgr) const {
  std::vector<BindingId> out;
  for (const auto& [id, b] : bindings_)
    if (check_binding(b.client, b.server, mgr)) out.push_back(id);
  return out;
}

std::string Assembly::report() const {
  std::ostringstream out;
  const auto names = [&](const std::set<ComponentId>& ids) {
    std::vector<std::string> v;
    for (const auto& id : ids) v.push_back(get(id).name);
    std::sort(v.begin(), v.end());
    std::string s;
    for (const auto& n : v) s += (s.empty() ? "" : ",") + n;
    return s;
  };
  for (const auto& [id, c] : components_) {
    out << "component " << c.name << ' ' << (c.kind == ComponentKind::Primitive ? "primitive" : "composite")
        << " info=" << c.info_module.str();
    if (c.content) out << " content=" << c.content->str() << '@' << c.content->def().version.str();
    out << " parents=[" << names(c.parents) << "] children=[" << names(c.children) << "]\n";
    for (const auto& p : c.interfaces)
      out << "  port " << p.name << ' ' << to_string(p.role) << ' ' << p.signature << '@' << p.version.str() << '\n';
  }
  // Sorted by text rather than id so a binding restored after a failed
  // rebind reports identically.
  std::vector<std::string> lines;
  for (const auto& [id, b] : bindings_)
    lines.push_back("binding " + port_name(b.client) + " -> " + port_name(b.server) + " (" +
                    std::string(to_string(b.scope)) + ")\n");
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l;
  return out.str();
}

} // namespace reconfig
