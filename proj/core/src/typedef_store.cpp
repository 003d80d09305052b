#include "reconfig/typedef_store.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>

namespace reconfig {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

Error malformed(const std::string& origin, std::size_t line, const std::string& reason) {
  std::string where = origin;
  if (line > 0) where += ":" + std::to_string(line);
  return Error(ErrorCode::MalformedTypeDef, where + ": " + reason, {origin, reason});
}

std::string join_versions(const std::vector<VersionTag>& versions) {
  std::string out;
  for (const auto& v : versions) {
    if (!out.empty()) out += ", ";
    out += v.str();
  }
  return out;
}

} // namespace

// VersionTag ---------------------------------------------------------------

std::optional<VersionTag> VersionTag::try_parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  VersionTag tag;
  tag.parts_.clear();
  std::size_t pos = 0;
  while (true) {
    const auto dot = text.find('.', pos);
    const auto piece = text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (piece.empty() || piece.size() > 18) return std::nullopt;
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc{} || ptr != piece.data() + piece.size()) return std::nullopt;
    tag.parts_.push_back(value);
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  tag.text_ = std::string(text);
  return tag;
}

VersionTag VersionTag::parse(std::string_view text) {
  if (auto tag = try_parse(text)) return *std::move(tag);
  throw Error(ErrorCode::InvalidVersion, "invalid version '" + std::string(text) + "'",
              {std::string(text)});
}

std::strong_ordering operator<=>(const VersionTag& a, const VersionTag& b) noexcept {
  const auto n = std::max(a.parts_.size(), b.parts_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t x = i < a.parts_.size() ? a.parts_[i] : 0;
    const std::uint64_t y = i < b.parts_.size() ? b.parts_[i] : 0;
    if (x != y) return x <=> y;
  }
  return std::strong_ordering::equal;
}

// Names --------------------------------------------------------------------

bool is_identifier(std::string_view text) noexcept {
  if (text.empty() || !is_ident_start(text.front())) return false;
  return std::all_of(text.begin() + 1, text.end(), is_ident_char);
}

bool is_type_name(std::string_view text) noexcept {
  if (text.empty()) return false;
  std::size_t pos = 0;
  while (true) {
    const auto dot = text.find('.', pos);
    if (!is_identifier(text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos)))
      return false;
    if (dot == std::string_view::npos) return true;
    pos = dot + 1;
  }
}

TypeRef TypeRef::parse(std::string_view text) {
  text = trim(text);
  TypeRef ref;
  const auto at = text.find('@');
  ref.name = std::string(text.substr(0, at));
  if (!is_type_name(ref.name))
    throw Error(ErrorCode::InvalidName, "invalid type name '" + ref.name + "'", {ref.name});
  if (at != std::string_view::npos) ref.version = VersionTag::parse(text.substr(at + 1));
  return ref;
}

std::string TypeRef::str() const { return version ? name + "@" + version->str() : name; }

MethodSig MethodSig::parse(std::string_view text) {
  text = trim(text);
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::InvalidName, "bad method signature '" + std::string(text) + "': " + why,
                 {std::string(text)});
  };
  const auto space = text.find_first_of(" \t");
  const auto open = text.find('(');
  if (space == std::string_view::npos || open == std::string_view::npos || open < space)
    throw fail("expected '<ret> <name>(...)'");
  if (text.back() != ')') throw fail("missing ')'");

  MethodSig sig;
  sig.returns = std::string(text.substr(0, space));
  sig.name = std::string(trim(text.substr(space, open - space)));
  if (!is_type_name(sig.returns)) throw fail("bad return type");
  if (!is_identifier(sig.name)) throw fail("bad method name");

  const auto inner = trim(text.substr(open + 1, text.size() - open - 2));
  if (!inner.empty()) {
    std::size_t pos = 0;
    while (true) {
      const auto comma = inner.find(',', pos);
      const auto param = trim(inner.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (!is_type_name(param)) throw fail("bad parameter type '" + std::string(param) + "'");
      sig.params.emplace_back(param);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  return sig;
}

std::string MethodSig::str() const {
  std::string out = returns + " " + name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ",";
    out += params[i];
  }
  return out + ")";
}

std::string_view to_string(TypeKind kind) noexcept {
  return kind == TypeKind::Interface ? "interface" : "class";
}

const MethodSig* TypeDef::find_method(std::string_view method) const noexcept {
  for (const auto& m : methods)
    if (m.name == method) return &m;
  return nullptr;
}

// Typedef files ------------------------------------------------------------

TypeDef parse_typedef(std::string_view text, const std::string& origin) {
  TypeDef def;
  bool have_name = false, have_version = false, have_kind = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw malformed(origin, line_no, "expected 'key: value'");
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (value.empty()) throw malformed(origin, line_no, "empty value for '" + std::string(key) + "'");

    try {
      if (key == "name") {
        if (have_name) throw malformed(origin, line_no, "duplicate 'name'");
        if (!is_type_name(value)) throw malformed(origin, line_no, "invalid type name '" + std::string(value) + "'");
        def.name = std::string(value);
        have_name = true;
      } else if (key == "version") {
        if (have_version) throw malformed(origin, line_no, "duplicate 'version'");
        def.version = VersionTag::parse(value);
        have_version = true;
      } else if (key == "kind") {
        if (have_kind) throw malformed(origin, line_no, "duplicate 'kind'");
        if (value == "interface") def.kind = TypeKind::Interface;
        else if (value == "class") def.kind = TypeKind::Class;
        else throw malformed(origin, line_no, "kind must be 'interface' or 'class'");
        have_kind = true;
      } else if (key == "ref") {
        def.references.insert(TypeRef::parse(value));
      } else if (key == "method") {
        auto sig = MethodSig::parse(value);
        if (def.find_method(sig.name))
          throw malformed(origin, line_no, "duplicate method '" + sig.name + "'");
        def.methods.push_back(std::move(sig));
      } else {
        throw malformed(origin, line_no, "unknown key '" + std::string(key) + "'");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedTypeDef) throw;
      throw malformed(origin, line_no, e.message());
    }
  }

  if (!have_name) throw malformed(origin, 0, "missing 'name'");
  if (!have_version) throw malformed(origin, 0, "missing 'version'");
  if (!have_kind) throw malformed(origin, 0, "missing 'kind'");
  if (def.references.contains(TypeRef{def.name, def.version}))
    throw malformed(origin, 0, "definition references itself");
  return def;
}

std::string serialize_typedef(const TypeDef& def) {
  std::ostringstream out;
  out << "name: " << def.name << '\n'
      << "version: " << def.version.str() << '\n'
      << "kind: " << to_string(def.kind) << '\n';
  for (const auto& ref : def.references) out << "ref: " << ref.str() << '\n';
  for (const auto& m : def.methods) out << "method: " << m.str() << '\n';
  return out.str();
}

std::string typedef_file_name(const TypeKey& key) {
  return key.name + "-" + key.version.str() + ".typedef";
}

// CorpusStore --------------------------------------------------------------

CorpusStore CorpusStore::load(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw Error(ErrorCode::IoError, "corpus root is not a readable directory: " + root.string(),
                {root.string()});

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".typedef") files.push_back(it->path());
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot enumerate " + root.string() + ": " + ec.message());
  // Enumeration order is filesystem-dependent.
  std::sort(files.begin(), files.end());

  CorpusStore store;
  store.root_ = root;
  std::map<TypeKey, fs::path> origin;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + file.string(), {file.string()});
    std::ostringstream body;
    body << in.rdbuf();

    auto def = parse_typedef(body.str(), file.string());
    const auto expected = typedef_file_name(def.key());
    if (file.filename().string() != expected)
      throw malformed(file.string(), 0, "file name must be '" + expected + "'");

    const auto key = def.key();
    if (const auto prev = origin.find(key); prev != origin.end()) {
      throw Error(ErrorCode::DuplicateTypeDef,
                  key.str() + " defined by both " + prev->second.string() + " and " + file.string(),
                  {key.name, key.version.str(), prev->second.string(), file.string()});
    }
    origin.emplace(key, file);
    store.index_.emplace(key, std::move(def));
  }
  return store;
}

CorpusStore CorpusStore::from_typedefs(std::vector<TypeDef> defs) {
  CorpusStore store;
  for (auto& def : defs) {
    auto key = def.key();
    if (store.index_.contains(key))
      throw Error(ErrorCode::DuplicateTypeDef, key.str() + " defined twice",
                  {key.name, key.version.str(), "<memory>", "<memory>"});
    store.index_.emplace(std::move(key), std::move(def));
  }
  return store;
}

const TypeDef* CorpusStore::find(const TypeKey& key) const noexcept {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &it->second;
}

TypeKey CorpusStore::resolve(const TypeRef& ref) const {
  if (ref.version) {
    TypeKey key{ref.name, *ref.version};
    if (!index_.contains(key))
      throw Error(ErrorCode::NotFound, "no definition for " + key.str(), {ref.name, ref.version->str()});
    return key;
  }
  const auto versions = list_versions(ref.name);
  if (versions.empty())
    throw Error(ErrorCode::NotFound, "no definition for " + ref.name, {ref.name, ""});
  if (versions.size() > 1) {
    std::vector<std::string> details{ref.name};
    for (const auto& v : versions) details.push_back(v.str());
    throw Error(ErrorCode::AmbiguousVersion,
                ref.name + " has several versions (" + join_versions(versions) + "); pin one", std::move(details));
  }
  return TypeKey{ref.name, versions.front()};
}

const TypeDef& CorpusStore::get(const TypeRef& ref) const { return index_.at(resolve(ref)); }

std::vector<VersionTag> CorpusStore::list_versions(std::string_view name) const {
  std::vector<VersionTag> out;
  // VersionTag() is "0", the smallest possible tag.
  for (auto it = index_.lower_bound(TypeKey{std::string(name), VersionTag()});
       it != index_.end() && it->first.name == name; ++it)
    out.push_back(it->first.version);
  return out;
}

std::set<TypeKey> CorpusStore::closure(std::span<const TypeRef> roots) const {
  std::set<TypeKey> seen;
  // Each queued entry remembers how it was reached, for error reporting.
  std::deque<std::pair<TypeRef, std::string>> work;
  for (const auto& r : roots) work.emplace_back(r, std::string{});

  while (!work.empty()) {
    auto [ref, chain] = std::move(work.front());
    work.pop_front();
    TypeKey key;
    try {
      key = resolve(ref);
    } catch (Error& e) {
      if (!chain.empty()) e.with_context("reference chain " + chain + " -> " + ref.str());
      throw;
    }
    if (!seen.insert(key).second) continue;
    const auto next_chain = chain.empty() ? key.str() : chain + " -> " + key.str();
    for (const auto& child : index_.at(key).references) work.emplace_back(child, next_chain);
  }
  return seen;
}

void CorpusStore::write_to(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [key, def] : index_) {
    std::ofstream out(dir / typedef_file_name(key), std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write into " + dir.string());
    out << serialize_typedef(def);
  }
}

} // namespace reconfig
