#include "reconfig/adl.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace reconfig {
namespace {

constexpr std::size_t kMaxDepth = 64;

struct RawAttr {
  std::string name;
  std::string value;
  SourceLoc loc;
};

struct RawElement {
  std::string name;
  std::vector<RawAttr> attrs;
  std::vector<RawElement> children;
  SourceLoc loc;
};

[[noreturn]] void parse_error(SourceLoc loc, const std::string& expected, const std::string& found = {}) {
  std::string msg = "line " + std::to_string(loc.line) + " col " + std::to_string(loc.col) + ": expected " + expected;
  if (!found.empty()) msg += ", found " + found;
  throw Error(ErrorCode::ParseError, msg, {std::to_string(loc.line), std::to_string(loc.col), expected});
}

bool name_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool name_char(char c) { return name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.'; }
bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string describe(char c) {
  if (c == '\n') return "newline";
  if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) return "byte " + std::to_string(static_cast<unsigned char>(c));
  return std::string("'") + c + "'";
}

/// Generic well-formedness layer: elements, attributes, comments.
class XmlReader {
public:
  explicit XmlReader(std::string_view src) : src_(src) {}

  RawElement document() {
    if (starts_with("\xEF\xBB\xBF")) advance(3);
    if (starts_with("<?xml")) skip_prolog();
    skip_misc();
    if (at_end()) parse_error(loc(), "root element", "end of input");
    auto root = element(0);
    skip_misc();
    if (!at_end()) parse_error(loc(), "end of input", describe(peek()));
    return root;
  }

  RawElement single_element() {
    skip_misc();
    if (at_end()) parse_error(loc(), "element", "end of input");
    auto e = element(0);
    skip_misc();
    if (!at_end()) parse_error(loc(), "end of input", describe(peek()));
    return e;
  }

private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
  bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }
  SourceLoc loc() const { return SourceLoc{line_, col_}; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && !at_end(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void expect(char c) {
    if (peek() != c || at_end()) parse_error(loc(), std::string("'") + c + "'", at_end() ? "end of input" : describe(peek()));
    advance();
  }

  void skip_ws() {
    while (!at_end() && is_ws(peek())) advance();
  }

  void skip_prolog() {
    const auto start = loc();
    const auto end = src_.find("?>", pos_);
    if (end == std::string_view::npos) parse_error(start, "'?>' closing the XML declaration", "end of input");
    advance(end + 2 - pos_);
  }

  void skip_comment() {
    const auto start = loc();
    advance(4);
    const auto end = src_.find("-->", pos_);
    if (end == std::string_view::npos) parse_error(start, "'-->' closing the comment", "end of input");
    advance(end + 3 - pos_);
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<!")) {
        parse_error(loc(), "element or comment", "DTD declaration");
      } else if (starts_with("<?")) {
        parse_error(loc(), "element or comment", "processing instruction");
      } else {
        return;
      }
    }
  }

  std::string name() {
    if (at_end() || !name_start(peek())) parse_error(loc(), "name", at_end() ? "end of input" : describe(peek()));
    const auto start = pos_;
    while (!at_end() && name_char(peek())) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string attr_value() {
    const char quote = peek();
    if (quote != '"' && quote != '\'') parse_error(loc(), "quoted attribute value", at_end() ? "end of input" : describe(peek()));
    advance();
    std::string out;
    while (true) {
      if (at_end()) parse_error(loc(), std::string("closing ") + quote, "end of input");
      const char c = peek();
      if (c == quote) break;
      if (c == '<') parse_error(loc(), "attribute character", "'<'");
      if (c == '&') {
        static constexpr std::pair<std::string_view, char> entities[] = {
            {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
        bool matched = false;
        for (const auto& [text, ch] : entities) {
          if (starts_with(text)) {
            out += ch;
            advance(text.size());
            matched = true;
            break;
          }
        }
        if (!matched) parse_error(loc(), "entity reference (&amp; &lt; &gt; &quot; &apos;)", "'&'");
        continue;
      }
      out += c;
      advance();
    }
    advance();
    return out;
  }

  RawElement element(std::size_t depth) {
    if (depth > kMaxDepth) parse_error(loc(), "shallower nesting");
    RawElement e;
    e.loc = loc();
    expect('<');
    e.name = name();
    if (peek() == ':') parse_error(loc(), "attribute or '>'", "namespace prefix");

    while (true) {
      const bool had_ws = !at_end() && is_ws(peek());
      skip_ws();
      if (at_end()) parse_error(loc(), "'>' or '/>'", "end of input");
      if (peek() == '/') {
        advance();
        expect('>');
        return e;
      }
      if (peek() == '>') {
        advance();
        break;
      }
      if (!had_ws) parse_error(loc(), "whitespace before attribute", describe(peek()));
      RawAttr a;
      a.loc = loc();
      a.name = name();
      if (peek() == ':') parse_error(loc(), "'='", "namespace prefix");
      for (const auto& other : e.attrs)
        if (other.name == a.name) parse_error(a.loc, "distinct attribute names", "duplicate '" + a.name + "'");
      skip_ws();
      expect('=');
      skip_ws();
      a.value = attr_value();
      e.attrs.push_back(std::move(a));
    }

    while (true) {
      skip_misc();
      if (at_end()) parse_error(loc(), "'</" + e.name + ">'", "end of input");
      if (starts_with("</")) {
        advance(2);
        const auto close_loc = loc();
        const auto closing = name();
        if (closing != e.name) parse_error(close_loc, "'</" + e.name + ">'", "'</" + closing + ">'");
        skip_ws();
        expect('>');
        return e;
      }
      if (peek() != '<') parse_error(loc(), "'<'", "character data " + describe(peek()));
      e.children.push_back(element(depth + 1));
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// Schema layer ---------------------------------------------------------------

const std::set<std::string, std::less<>> kElements = {"definition", "interface", "component",
                                                       "content",    "file",      "binding"};

class Attrs {
public:
  Attrs(const RawElement& e, std::initializer_list<std::string_view> allowed) : e_(e) {
    for (const auto& a : e.attrs) {
      if (e.name == "component" && a.name == "reconfigurable")
        throw Error(ErrorCode::NotImplemented,
                    "line " + std::to_string(a.loc.line) + ": per-component reconfigurability selection is reserved",
                    {a.name});
      if (std::find(allowed.begin(), allowed.end(), a.name) == allowed.end())
        throw Error(ErrorCode::UnknownAttribute,
                    "line " + std::to_string(a.loc.line) + " col " + std::to_string(a.loc.col) + ": attribute '" +
                        a.name + "' is not allowed on <" + e.name + ">",
                    {a.name, e.name, std::to_string(a.loc.line), std::to_string(a.loc.col)});
    }
  }

  const RawAttr* find(std::string_view name) const {
    for (const auto& a : e_.attrs)
      if (a.name == name) return &a;
    return nullptr;
  }

  const RawAttr& required(std::string_view name) const {
    if (const auto* a = find(name)) return *a;
    parse_error(e_.loc, "attribute '" + std::string(name) + "' on <" + e_.name + ">");
  }

  std::string identifier(std::string_view name) const {
    const auto& a = required(name);
    if (!is_identifier(a.value)) parse_error(a.loc, "identifier for '" + a.name + "'", "'" + a.value + "'");
    return a.value;
  }

  std::string type_name(std::string_view name) const {
    const auto& a = required(name);
    if (!is_type_name(a.value)) parse_error(a.loc, "type name for '" + a.name + "'", "'" + a.value + "'");
    return a.value;
  }

  std::optional<VersionTag> version() const {
    const auto* a = find("version");
    if (!a) return std::nullopt;
    auto v = VersionTag::try_parse(a->value);
    if (!v) parse_error(a->loc, "version like 1.0", "'" + a->value + "'");
    return v;
  }

private:
  const RawElement& e_;
};

void check_known(const RawElement& e) {
  if (!kElements.contains(e.name))
    throw Error(ErrorCode::UnknownElement,
                "line " + std::to_string(e.loc.line) + " col " + std::to_string(e.loc.col) + ": unknown element <" +
                    e.name + ">",
                {e.name, std::to_string(e.loc.line), std::to_string(e.loc.col)});
}

void expect_empty(const RawElement& e) {
  if (!e.children.empty()) {
    check_known(e.children.front());
    parse_error(e.children.front().loc, "no child elements inside <" + e.name + ">",
                "<" + e.children.front().name + ">");
  }
}

AdlInterface to_interface(const RawElement& e) {
  Attrs attrs(e, {"name", "role", "signature", "version"});
  expect_empty(e);
  AdlInterface itf;
  itf.loc = e.loc;
  itf.name = attrs.identifier("name");
  const auto& role = attrs.required("role");
  if (role.value == "client") itf.role = Role::Client;
  else if (role.value == "server") itf.role = Role::Server;
  else parse_error(role.loc, "'client' or 'server'", "'" + role.value + "'");
  itf.signature = attrs.type_name("signature");
  itf.version = attrs.version();
  return itf;
}

AdlComponent to_component(const RawElement& e) {
  Attrs attrs(e, {"name"});
  AdlComponent c;
  c.loc = e.loc;
  c.name = attrs.identifier("name");
  if (c.name == "this") parse_error(attrs.required("name").loc, "component name other than 'this'");
  bool have_content = false;
  for (const auto& child : e.children) {
    check_known(child);
    if (child.name == "interface") {
      c.interfaces.push_back(to_interface(child));
    } else if (child.name == "content") {
      if (have_content) parse_error(child.loc, "a single <content> per component", "second <content>");
      Attrs ca(child, {"class", "version"});
      expect_empty(child);
      c.content.class_name = ca.type_name("class");
      c.content.version = ca.version();
      c.content.loc = child.loc;
      have_content = true;
    } else if (child.name == "file") {
      Attrs fa(child, {"name", "version"});
      expect_empty(child);
      c.files.push_back(AdlFile{fa.type_name("name"), fa.version(), child.loc});
    } else if (child.name == "component") {
      parse_error(child.loc, "<interface>, <content> or <file>", "nested <component>");
    } else {
      parse_error(child.loc, "<interface>, <content> or <file>", "<" + child.name + ">");
    }
  }
  if (!have_content) parse_error(e.loc, "<content> inside <component name=\"" + c.name + "\">");
  return c;
}

AdlDefinition to_definition(const RawElement& e) {
  check_known(e);
  if (e.name != "definition") parse_error(e.loc, "<definition>", "<" + e.name + ">");
  Attrs attrs(e, {"name", "version"});
  AdlDefinition def;
  def.loc = e.loc;
  def.name = attrs.type_name("name");
  const auto version = attrs.version();
  if (!version) parse_error(e.loc, "attribute 'version' on <definition>");
  def.version = *version;

  for (const auto& child : e.children) {
    check_known(child);
    if (child.name == "interface") {
      def.interfaces.push_back(to_interface(child));
    } else if (child.name == "component") {
      def.components.push_back(to_component(child));
    } else if (child.name == "binding") {
      Attrs ba(child, {"client", "server"});
      expect_empty(child);
      const auto& ca = ba.required("client");
      const auto& sa = ba.required("server");
      auto client = AdlEndpoint::parse(ca.value);
      if (!client) parse_error(ca.loc, "endpoint 'component.port'", "'" + ca.value + "'");
      auto server = AdlEndpoint::parse(sa.value);
      if (!server) parse_error(sa.loc, "endpoint 'component.port'", "'" + sa.value + "'");
      def.bindings.push_back(AdlBinding{*client, *server, child.loc});
    } else {
      parse_error(child.loc, "<interface>, <component> or <binding>", "<" + child.name + ">");
    }
  }

  // Cross-element invariants.
  std::set<std::string> names;
  for (const auto& c : def.components)
    if (!names.insert(c.name).second) parse_error(c.loc, "unique component name", "duplicate '" + c.name + "'");
  for (const auto& b : def.bindings) {
    for (const auto* ep : {&b.client, &b.server}) {
      if (!def.endpoint_interface(*ep)) parse_error(b.loc, "binding endpoint naming a declared port", "'" + ep->str() + "'");
    }
  }
  return def;
}

std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

void print_interface(std::ostringstream& out, const AdlInterface& itf, const std::string& pad) {
  out << pad << "<interface name=\"" << escape(itf.name) << "\" role=\"" << to_string(itf.role) << "\" signature=\""
      << escape(itf.signature) << '"';
  if (itf.version) out << " version=\"" << itf.version->str() << '"';
  out << "/>\n";
}

void print_component(std::ostringstream& out, const AdlComponent& c, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 4, ' ');
  out << pad << "<component name=\"" << escape(c.name) << "\">\n";
  for (const auto& itf : c.interfaces) print_interface(out, itf, inner);
  out << inner << "<content class=\"" << escape(c.content.class_name) << '"';
  if (c.content.version) out << " version=\"" << c.content.version->str() << '"';
  out << "/>\n";
  for (const auto& f : c.files) {
    out << inner << "<file name=\"" << escape(f.name) << '"';
    if (f.version) out << " version=\"" << f.version->str() << '"';
    out << "/>\n";
  }
  out << pad << "</component>\n";
}

std::string version_text(const std::optional<VersionTag>& v) { return v ? "@" + v->str() : std::string(); }

} // namespace

const AdlInterface* AdlComponent::find_interface(std::string_view port) const noexcept {
  for (const auto& i : interfaces)
    if (i.name == port) return &i;
  return nullptr;
}

std::optional<AdlEndpoint> AdlEndpoint::parse(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos || text.find('.', dot + 1) != std::string_view::npos) return std::nullopt;
  AdlEndpoint ep{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
  if (!is_identifier(ep.component) || !is_identifier(ep.port)) return std::nullopt;
  return ep;
}

const AdlComponent* AdlDefinition::find_component(std::string_view component) const noexcept {
  for (const auto& c : components)
    if (c.name == component) return &c;
  return nullptr;
}

const AdlInterface* AdlDefinition::find_interface(std::string_view port) const noexcept {
  for (const auto& i : interfaces)
    if (i.name == port) return &i;
  return nullptr;
}

const AdlInterface* AdlDefinition::endpoint_interface(const AdlEndpoint& ep) const noexcept {
  if (ep.is_this()) return find_interface(ep.port);
  const auto* c = find_component(ep.component);
  return c ? c->find_interface(ep.port) : nullptr;
}

AdlDefinition parse_adl(std::string_view text) {
  XmlReader reader(text);
  return to_definition(reader.document());
}

AdlComponent parse_adl_component(std::string_view text) {
  XmlReader reader(text);
  const auto e = reader.single_element();
  check_known(e);
  if (e.name != "component") parse_error(e.loc, "<component>", "<" + e.name + ">");
  return to_component(e);
}

std::string print_adl_component(const AdlComponent& component, int indent) {
  std::ostringstream out;
  print_component(out, component, indent);
  return out.str();
}

std::string print_adl(const AdlDefinition& def) {
  std::ostringstream out;
  out << "<definition name=\"" << escape(def.name) << "\" version=\"" << def.version.str() << "\">\n";
  for (const auto& itf : def.interfaces) print_interface(out, itf, "    ");
  for (const auto& c : def.components) print_component(out, c, 1);
  for (const auto& b : def.bindings)
    out << "    <binding client=\"" << escape(b.client.str()) << "\" server=\"" << escape(b.server.str()) << "\"/>\n";
  out << "</definition>\n";
  return out.str();
}

std::vector<std::string> adl_invariant_violations(const AdlDefinition& def) {
  std::vector<std::string> out;
  if (!is_type_name(def.name)) out.push_back("definition name '" + def.name + "' is not a type name");
  const auto check_itfs = [&](const std::vector<AdlInterface>& itfs, const std::string& owner) {
    for (const auto& i : itfs) {
      if (!is_identifier(i.name)) out.push_back(owner + ": bad port name '" + i.name + "'");
      if (!is_type_name(i.signature)) out.push_back(owner + "." + i.name + ": bad signature '" + i.signature + "'");
    }
  };
  check_itfs(def.interfaces, "this");
  std::set<std::string> names;
  for (const auto& c : def.components) {
    if (!is_identifier(c.name) || c.name == "this") out.push_back("bad component name '" + c.name + "'");
    if (!names.insert(c.name).second) out.push_back("duplicate component '" + c.name + "'");
    check_itfs(c.interfaces, c.name);
    if (!is_type_name(c.content.class_name)) out.push_back(c.name + ": bad content class '" + c.content.class_name + "'");
    for (const auto& f : c.files)
      if (!is_type_name(f.name)) out.push_back(c.name + ": bad file '" + f.name + "'");
  }
  for (const auto& b : def.bindings) {
    for (const auto* ep : {&b.client, &b.server}) {
      if (!AdlEndpoint::parse(ep->str())) out.push_back("malformed endpoint '" + ep->str() + "'");
      else if (!def.endpoint_interface(*ep)) out.push_back("endpoint '" + ep->str() + "' names no declared port");
    }
  }
  return out;
}

// Validation -----------------------------------------------------------------

std::string Diagnostic::str() const {
  return std::string(level == Level::Error ? "ERROR" : "WARNING") + " " + code + " " + loc.str() + " " + message;
}

std::vector<Diagnostic> validate(const AdlDefinition& def, const CorpusStore& corpus) {
  std::vector<Diagnostic> diags;
  const auto report = [&](std::string code, SourceLoc loc, std::string message) {
    diags.push_back(Diagnostic{Level::Error, std::move(code), loc, std::move(message)});
  };

  // Returns the resolved definition or reports why it is unavailable.
  const auto lookup = [&](const TypeRef& ref, const std::string& unresolved_code, SourceLoc loc,
                          const std::string& what) -> const TypeDef* {
    try {
      return &corpus.get(ref);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AmbiguousVersion)
        report("AmbiguousVersion", loc, what + " " + ref.str() + " matches several versions; pin one");
      else
        report(unresolved_code, loc, what + " " + ref.str() + " not found in corpus");
      return nullptr;
    }
  };

  const auto check_ports = [&](const std::vector<AdlInterface>& itfs, const std::string& owner,
                               std::map<std::string, const TypeDef*>& sigs) {
    std::set<std::string> seen;
    for (const auto& itf : itfs) {
      if (!seen.insert(itf.name).second)
        report("DuplicatePort", itf.loc, "port " + owner + "." + itf.name + " declared twice");
      const auto* sig = lookup(TypeRef{itf.signature, itf.version}, "UnresolvableSignature", itf.loc,
                               "signature of " + owner + "." + itf.name);
      if (sig && sig->kind != TypeKind::Interface)
        report("NotAnInterface", itf.loc, "signature " + sig->key().str() + " of " + owner + "." + itf.name +
                                              " is a class");
      sigs.emplace(itf.name, sig);
    }
  };

  std::map<std::string, const TypeDef*> top_sigs;
  check_ports(def.interfaces, "this", top_sigs);

  for (const auto& c : def.components) {
    std::map<std::string, const TypeDef*> sigs;
    check_ports(c.interfaces, c.name, sigs);
    const auto* content = lookup(c.content.ref(), "UnresolvableContent", c.content.loc, "content of " + c.name);
    if (content && content->kind != TypeKind::Class)
      report("ContentNotAClass", c.content.loc, "content " + content->key().str() + " of " + c.name + " is an interface");
    if (content && content->kind == TypeKind::Class) {
      for (const auto& itf : c.interfaces) {
        const auto* sig = sigs[itf.name];
        if (itf.role != Role::Server || !sig || sig->kind != TypeKind::Interface) continue;
        if (auto missing = find_missing_method(*sig, *content))
          report("MissingMethod", c.content.loc, content->key().str() + " does not implement " + sig->key().str() +
                                                     "." + *missing + " required by " + c.name + "." + itf.name);
      }
    }
    for (const auto& f : c.files) lookup(f.ref(), "UnresolvableFile", f.loc, "shared file of " + c.name);
  }

  std::set<std::string> bound_clients;
  for (const auto& b : def.bindings) {
    const auto where = "binding " + b.client.str() + " -> " + b.server.str();
    const auto* ci = def.endpoint_interface(b.client);
    const auto* si = def.endpoint_interface(b.server);
    if (!ci || !si) {
      report("UnknownEndpoint", b.loc, where + " names an undeclared port");
      continue;
    }
    if (b.client.is_this() && b.server.is_this()) {
      report("RoleMismatch", b.loc, where + " joins two ports of the definition itself");
      continue;
    }
    const Role client_needs = b.client.is_this() ? Role::Server : Role::Client;
    const Role server_needs = b.server.is_this() ? Role::Client : Role::Server;
    bool roles_ok = true;
    if (ci->role != client_needs) {
      report("RoleMismatch", b.loc, where + ": client side must be a " + std::string(to_string(client_needs)) + " port");
      roles_ok = false;
    }
    if (si->role != server_needs) {
      report("RoleMismatch", b.loc, where + ": server side must be a " + std::string(to_string(server_needs)) + " port");
      roles_ok = false;
    }
    if (!bound_clients.insert(b.client.str()).second)
      report("DuplicateBinding", b.loc, b.client.str() + " is bound more than once");
    if (!roles_ok) continue;

    if (ci->signature != si->signature) {
      report("SignatureMismatch", b.loc, where + ": " + ci->signature + " vs " + si->signature);
      continue;
    }
    const auto effective = [&](const AdlInterface& itf) -> std::optional<VersionTag> {
      if (itf.version) return itf.version;
      try {
        return corpus.resolve(TypeRef{itf.signature, std::nullopt}).version;
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    const auto cv = effective(*ci);
    const auto sv = effective(*si);
    if (cv && sv && *cv != *sv)
      report("VersionMismatch", b.loc, where + ": client side " + ci->signature + version_text(cv) +
                                           ", server side " + si->signature + version_text(sv));
  }
  return diags;
}

} // namespace reconfig
