#ifndef RECONFIG_TYPEDEF_STORE_HPP
#define RECONFIG_TYPEDEF_STORE_HPP

// Versioned type definitions and the on-disk corpus they are loaded from.
//
// A corpus is a directory tree of `<name>-<version>.typedef` files. Each file
// holds one line-oriented definition:
//
//   name: Service
//   version: 1.0
//   kind: interface
//   ref: Request@1.0
//   method: object request(Request)
//
// `ref:` and `method:` may repeat. Blank lines and lines starting with `#`
// are ignored; any other key is rejected.

#include "reconfig/error.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reconfig {

/// Dot-separated decimal version ("1.0", "2.0", "0"). Ordering is numeric per
/// component with missing trailing components read as zero, so "1" == "1.0".
class VersionTag {
public:
  VersionTag() : text_("0"), parts_{0} {}

  static VersionTag parse(std::string_view text);
  static std::optional<VersionTag> try_parse(std::string_view text);

  const std::string& str() const noexcept { return text_; }
  std::span<const std::uint64_t> components() const noexcept { return parts_; }

  friend std::strong_ordering operator<=>(const VersionTag& a, const VersionTag& b) noexcept;
  friend bool operator==(const VersionTag& a, const VersionTag& b) noexcept {
    return (a <=> b) == std::strong_ordering::equal;
  }

private:
  std::string text_;
  std::vector<std::uint64_t> parts_;
};

/// `[A-Za-z_][A-Za-z0-9_]*`
bool is_identifier(std::string_view text) noexcept;
/// One or more identifiers joined by single dots.
bool is_type_name(std::string_view text) noexcept;

/// Name of the universal supertype. Parameters declared with it defer the
/// identity check to the argument's runtime type.
inline constexpr std::string_view kObjectType = "object";
inline constexpr std::string_view kVoidType = "void";

struct TypeRef {
  std::string name;
  std::optional<VersionTag> version;

  /// `Name` or `Name@1.0`
  static TypeRef parse(std::string_view text);
  std::string str() const;

  friend auto operator<=>(const TypeRef&, const TypeRef&) = default;
  friend bool operator==(const TypeRef&, const TypeRef&) = default;
};

/// Exact (name, version) coordinates of a definition.
struct TypeKey {
  std::string name;
  VersionTag version;

  std::string str() const { return name + "@" + version.str(); }
  TypeRef ref() const { return TypeRef{name, version}; }

  friend auto operator<=>(const TypeKey&, const TypeKey&) = default;
  friend bool operator==(const TypeKey&, const TypeKey&) = default;
};

struct MethodSig {
  std::string name;
  std::vector<std::string> params;
  std::string returns{kVoidType};

  /// `<ret> <name>(<t1>,<t2>,...)`
  static MethodSig parse(std::string_view text);
  std::string str() const;

  friend bool operator==(const MethodSig&, const MethodSig&) = default;
};

enum class TypeKind { Interface, Class };

std::string_view to_string(TypeKind kind) noexcept;

struct TypeDef {
  std::string name;
  VersionTag version;
  TypeKind kind = TypeKind::Class;
  std::set<TypeRef> references;
  std::vector<MethodSig> methods;

  TypeKey key() const { return TypeKey{name, version}; }
  const MethodSig* find_method(std::string_view method) const noexcept;

  friend bool operator==(const TypeDef&, const TypeDef&) = default;
};

/// Parses one typedef file body. `origin` names the source in diagnostics.
TypeDef parse_typedef(std::string_view text, const std::string& origin);
/// Canonical text form; parse_typedef(serialize_typedef(d)) == d.
std::string serialize_typedef(const TypeDef& def);
/// `<name>-<version>.typedef`
std::string typedef_file_name(const TypeKey& key);

/// Immutable index of type definitions. Safe to share between threads once
/// constructed.
class CorpusStore {
public:
  CorpusStore() = default;

  /// Loads every `*.typedef` file below `root` (recursively).
  static CorpusStore load(const std::filesystem::path& root);
  /// In-memory corpus; throws DuplicateTypeDef on repeated keys.
  static CorpusStore from_typedefs(std::vector<TypeDef> defs);

  /// Exact lookup when `ref.version` is set, otherwise the unique-version rule.
  const TypeDef& get(const TypeRef& ref) const;
  const TypeDef* find(const TypeKey& key) const noexcept;
  /// Resolves the version of `ref` without returning the definition.
  TypeKey resolve(const TypeRef& ref) const;

  /// Ascending.
  std::vector<VersionTag> list_versions(std::string_view name) const;

  /// Transitive closure over `references`, roots included.
  std::set<TypeKey> closure(std::span<const TypeRef> roots) const;

  const std::map<TypeKey, TypeDef>& index() const noexcept { return index_; }
  const std::filesystem::path& root() const noexcept { return root_; }
  std::size_t size() const noexcept { return index_.size(); }

  /// Writes every definition under `dir` using canonical file names.
  void write_to(const std::filesystem::path& dir) const;

private:
  std::filesystem::path root_;
  std::map<TypeKey, TypeDef> index_;
};

} // namespace reconfig

#endif
