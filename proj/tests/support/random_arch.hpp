#ifndef RECONFIG_TEST_RANDOM_ARCH_HPP
#define RECONFIG_TEST_RANDOM_ARCH_HPP

// Small randomized architectures over a fixed synthetic corpus. Interfaces
// S1..S3 exchange data classes D1..D4; every Impl class implements every
// interface method, so any content fits any server port.

#include "reconfig/runtime.hpp"

#include <random>

namespace testing {

inline std::shared_ptr<const reconfig::CorpusStore> synthetic_corpus() {
  using namespace reconfig;
  const auto def = [](std::string name, TypeKind kind, std::vector<std::string> refs, std::vector<std::string> methods) {
    TypeDef d;
    d.name = std::move(name);
    d.version = VersionTag::parse("1.0");
    d.kind = kind;
    for (auto& r : refs) d.references.insert(TypeRef::parse(r + "@1.0"));
    for (auto& m : methods) d.methods.push_back(MethodSig::parse(m));
    return d;
  };
  const std::vector<std::string> all{"void s1(D1)", "object s2(D2)", "void s3(object)"};
  return std::make_shared<const CorpusStore>(CorpusStore::from_typedefs({
      def("D1", TypeKind::Class, {}, {}),
      def("D2", TypeKind::Class, {"D3"}, {}),
      def("D3", TypeKind::Class, {}, {}),
      def("D4", TypeKind::Class, {}, {}),
      def("S1", TypeKind::Interface, {"D1"}, {"void s1(D1)"}),
      def("S2", TypeKind::Interface, {"D2"}, {"object s2(D2)"}),
      def("S3", TypeKind::Interface, {}, {"void s3(object)"}),
      def("Impl1", TypeKind::Class, {"D1", "D4"}, all),
      def("Impl2", TypeKind::Class, {"D2"}, all),
      def("Impl3", TypeKind::Class, {"D4", "D1", "D2"}, all),
  }));
}

/// Components c0..c{n-1}; a client port of ci binds only to a server port of
/// some cj with j > i, so forwarding always terminates.
inline reconfig::AdlDefinition random_adl(std::mt19937& rng, int max_components = 5) {
  using namespace reconfig;
  const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  AdlDefinition def;
  def.name = "R";
  def.version = VersionTag::parse("1.0");
  const int n = pick(1, max_components);
  for (int i = 0; i < n; ++i) {
    AdlComponent c;
    c.name = "c" + std::to_string(i);
    const int servers = pick(1, 2), clients = pick(0, 2);
    for (int k = 0; k < servers; ++k)
      c.interfaces.push_back(AdlInterface{"in" + std::to_string(k), Role::Server, "S" + std::to_string(pick(1, 3)),
                                          VersionTag::parse("1.0"), {}});
    for (int k = 0; k < clients; ++k)
      c.interfaces.push_back(AdlInterface{"out" + std::to_string(k), Role::Client, "S" + std::to_string(pick(1, 3)),
                                          VersionTag::parse("1.0"), {}});
    c.content = AdlContent{"Impl" + std::to_string(pick(1, 3)), VersionTag::parse("1.0"), {}};
    for (int d = 1; d <= 4; ++d)
      if (pick(0, 3) == 0) c.files.push_back(AdlFile{"D" + std::to_string(d), VersionTag::parse("1.0"), {}});
    def.components.push_back(std::move(c));
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& p : def.components[i].interfaces) {
      if (p.role != Role::Client || pick(0, 9) < 3) continue;
      std::vector<AdlEndpoint> targets;
      for (int j = i + 1; j < n; ++j)
        for (const auto& q : def.components[j].interfaces)
          if (q.role == Role::Server && q.signature == p.signature) targets.push_back({def.components[j].name, q.name});
      if (!targets.empty())
        def.bindings.push_back(AdlBinding{{def.components[i].name, p.name}, targets[rng() % targets.size()], {}});
    }
  }
  if (pick(0, 1)) {
    const auto& first = def.components[0].interfaces[0];
    def.interfaces.push_back(AdlInterface{"top", Role::Server, first.signature, first.version, {}});
    def.bindings.push_back(AdlBinding{{"this", "top"}, {def.components[0].name, first.name}, {}});
  }
  return def;
}

} // namespace testing

#endif
