#include "random_arch.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace reconfig;
using testing::error_of;

namespace {

std::vector<std::string> labels(const ModulePlan& plan) {
  std::vector<std::string> out;
  for (const auto& r : plan.resources) out.push_back(r.label);
  std::sort(out.begin(), out.end());
  return out;
}

const PlannedInfo& info_of(const ModulePlan& plan, const std::string& component) {
  const auto* info = plan.info_for(component);
  REQUIRE(info != nullptr);
  return *info;
}

TypeDef def(std::string name, TypeKind kind, std::vector<std::string> refs, std::vector<std::string> methods) {
  TypeDef d;
  d.name = std::move(name);
  d.version = VersionTag::parse("1.0");
  d.kind = kind;
  for (auto& r : refs) d.references.insert(TypeRef::parse(r));
  for (auto& m : methods) d.methods.push_back(MethodSig::parse(m));
  return d;
}

/// Interface and shared modules export disjoint type sets, and no private
/// implementation copy duplicates one of them.
void check_plan_invariants(const AdlDefinition& adl, const ModulePlan& plan, const CorpusStore& corpus) {
  std::map<TypeKey, int> owners;
  for (const auto& r : plan.resources)
    if (r.role != ModuleRole::Implementation)
      for (const auto& e : r.exports) ++owners[e.key()];
  for (const auto& [k, n] : owners) CHECK_MESSAGE(n == 1, k.str());
  for (const auto& r : plan.resources)
    if (r.role == ModuleRole::Implementation)
      for (const auto& e : r.exports) CHECK_MESSAGE(owners.count(e.key()) == 0, r.label, " ", e.key().str());

  // Every binding's signature is wired to one module on both ends.
  for (const auto& b : adl.bindings) {
    const auto side = [&](const AdlEndpoint& ep) {
      const auto* info = plan.info_for(ep.is_this() ? adl.name : ep.component);
      REQUIRE(info != nullptr);
      return info->wiring.at(adl.endpoint_interface(ep)->signature);
    };
    CHECK(side(b.client) == side(b.server));
  }

  // Declared shared files and their closures live in shared modules.
  for (const auto& c : adl.components) {
    std::vector<TypeRef> files;
    for (const auto& f : c.files) files.push_back(f.ref());
    for (const auto& k : corpus.closure(files)) {
      bool is_sig = false;
      for (const auto& cc : adl.components)
        for (const auto& i : cc.interfaces) is_sig = is_sig || i.signature == k.name;
      for (const auto& i : adl.interfaces) is_sig = is_sig || i.signature == k.name;
      if (is_sig) continue;
      const auto* home = plan.find_resource(info_of(plan, c.name).wiring.at(k.name));
      REQUIRE(home != nullptr);
      CHECK_MESSAGE(home->role == ModuleRole::Shared, k.str());
    }
  }

  // Imports are exactly what the wiring targets export.
  for (const auto& info : plan.infos)
    for (const auto& i : info.imports) {
      const auto* r = plan.find_resource(info.wiring.at(i.name));
      REQUIRE(r != nullptr);
      CHECK(std::find(r->exports.begin(), r->exports.end(), ExportDecl{i.name, i.version}) != r->exports.end());
    }
}

} // namespace

TEST_CASE("granularity names") {
  CHECK(parse_granularity("single") == Granularity::SingleLoader);
  CHECK(parse_granularity("per-component") == Granularity::PerComponent);
  CHECK(error_of([] { parse_granularity("selective"); }) == ErrorCode::NotImplemented);
  CHECK(error_of([] { parse_granularity("many"); }) == ErrorCode::InvalidArgument);
  CHECK(to_string(Granularity::SingleLoader) == "single");
}

TEST_CASE("per-component plan of the architecture example") {
  const auto adl = testing::adl("hello/helloworld.fractal.xml");
  const auto corpus = testing::corpus("hello/corpus");
  const auto plan = plan_modules(adl, Granularity::PerComponent, *corpus);
  CHECK(labels(plan) == std::vector<std::string>{"impl(ClientImpl@1.0)", "impl(ServerImpl@2.0)", "itf(Service@1.0)",
                                                 "itf(java.lang.Runnable@0)", "shared(Request@1.0)"});
  REQUIRE(plan.infos.size() == 3);
  CHECK(info_of(plan, "HelloWorld").wiring == std::map<std::string, std::string>{
                                                  {"java.lang.Runnable", "itf(java.lang.Runnable@0)"}});
  CHECK(info_of(plan, "server").wiring.at("Request") == "shared(Request@1.0)");
  CHECK(info_of(plan, "client").wiring.at("Service") == info_of(plan, "server").wiring.at("Service"));
  check_plan_invariants(adl, plan, *corpus);
  CHECK(plan.report() == plan_modules(adl, Granularity::PerComponent, *corpus).report());
  const auto report = plan.report();
  CHECK(std::count(report.begin(), report.end(), '\n') == 8);
}

TEST_CASE("interface, implementation and shared modules for two components") {
  // Two components bound through CmpItf, which exchanges ExchangedItf.
  const auto corpus = CorpusStore::from_typedefs({
      def("CmpItf", TypeKind::Interface, {"ExchangedItf@1.0"}, {"void call(ExchangedItf)"}),
      def("ExchangedItf", TypeKind::Interface, {}, {}),
      def("Cmp1Impl", TypeKind::Class, {"ExchangedItf@1.0"}, {}),
      def("Cmp2Impl", TypeKind::Class, {"ExchangedItf@1.0"}, {"void call(ExchangedItf)"}),
  });
  const auto adl = parse_adl(R"(<definition name="App" version="1.0">
    <component name="cmp1">
        <interface name="out" role="client" signature="CmpItf" version="1.0"/>
        <content class="Cmp1Impl" version="1.0"/>
        <file name="ExchangedItf" version="1.0"/>
    </component>
    <component name="cmp2">
        <interface name="in" role="server" signature="CmpItf" version="1.0"/>
        <content class="Cmp2Impl" version="1.0"/>
        <file name="ExchangedItf" version="1.0"/>
    </component>
    <binding client="cmp1.out" server="cmp2.in"/>
</definition>)");
  const auto plan = plan_modules(adl, Granularity::PerComponent, corpus);
  std::map<ModuleRole, int> roles;
  for (const auto& r : plan.resources) ++roles[r.role];
  CHECK(roles[ModuleRole::Implementation] == 2);
  CHECK(roles[ModuleRole::Interface] == 1);
  CHECK(roles[ModuleRole::Shared] == 1);
  CHECK(plan.infos.size() == 2);
  check_plan_invariants(adl, plan, corpus);
}

TEST_CASE("single loader") {
  const auto adl = testing::adl("hello/helloworld.fractal.xml");
  const auto corpus = testing::corpus("hello/corpus");
  const auto plan = plan_modules(adl, Granularity::SingleLoader, *corpus);
  REQUIRE(plan.resources.size() == 1);
  REQUIRE(plan.infos.size() == 1);
  CHECK(plan.resources[0].exports.size() == corpus->size());
  CHECK(plan.infos[0].components == std::vector<std::string>{"HelloWorld", "client", "server"});

  const auto split = testing::adl("evolved/request-conflict.fractal.xml");
  const auto evolved = testing::corpus("evolved/corpus");
  try {
    plan_modules(split, Granularity::SingleLoader, *evolved);
    FAIL("expected VersionConflict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionConflict);
    CHECK(e.details() == std::vector<std::string>{"Request", "1.0", "2.0"});
  }
  // Separate loaders can hold both versions.
  const auto per = plan_modules(split, Granularity::PerComponent, *evolved);
  CHECK(labels(per).size() == 5);
  check_plan_invariants(split, per, *evolved);
}

TEST_CASE("planning refuses invalid definitions") {
  auto adl = testing::adl("hello/helloworld.fractal.xml");
  adl.components[1].content.version = VersionTag::parse("9.0");
  try {
    plan_modules(adl, Granularity::PerComponent, *testing::corpus("hello/corpus"));
    FAIL("expected InvalidDefinition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidDefinition);
    REQUIRE(e.details().size() == 1);
    CHECK(e.details()[0].find("UnresolvableContent") != std::string::npos);
  }
}

TEST_CASE("one loader cannot hold two versions of a name") {
  // A component whose own closure reaches Request at two versions.
  const auto corpus = CorpusStore::from_typedefs({
      def("java.lang.Runnable", TypeKind::Interface, {}, {"void run()"}),
      def("Request", TypeKind::Class, {}, {}),
      [] {
        auto d = def("Request", TypeKind::Class, {}, {});
        d.version = VersionTag::parse("2.0");
        return d;
      }(),
      def("Old", TypeKind::Class, {"Request@1.0"}, {"void run()"}),
  });
  const auto adl = parse_adl(R"(<definition name="App" version="1.0">
    <component name="a">
        <interface name="r" role="server" signature="java.lang.Runnable"/>
        <content class="Old" version="1.0"/>
        <file name="Request" version="2.0"/>
    </component>
</definition>)");
  CHECK(error_of([&] { plan_modules(adl, Granularity::PerComponent, corpus); }) == ErrorCode::VersionConflict);
}

TEST_CASE("property: generated per-component plans") {
  std::mt19937 rng(31337);
  const auto corpus = testing::synthetic_corpus();
  for (int round = 0; round < 200; ++round) {
    const auto adl = testing::random_adl(rng);
    REQUIRE(validate(adl, *corpus).empty());
    const auto plan = plan_modules(adl, Granularity::PerComponent, *corpus);
    check_plan_invariants(adl, plan, *corpus);
    CHECK(plan.report() == plan_modules(adl, Granularity::PerComponent, *corpus).report());

    // The plan's granularity rule: one impl per component, one itf per signature.
    std::set<std::string> sigs;
    for (const auto& c : adl.components)
      for (const auto& i : c.interfaces) sigs.insert(i.signature);
    int impls = 0, itfs = 0;
    for (const auto& r : plan.resources) {
      impls += r.role == ModuleRole::Implementation;
      itfs += r.role == ModuleRole::Interface;
    }
    CHECK(impls == static_cast<int>(adl.components.size()));
    CHECK(itfs == static_cast<int>(sigs.size()));

    auto arch = build_architecture(adl, Granularity::PerComponent, std::make_shared<ModuleManager>(), corpus);
    CHECK(arch->assembly.broken_bindings(*arch->mgr).empty());
    CHECK(arch->assembly.bindings().size() == adl.bindings.size());
  }
}

TEST_CASE("instantiate") {
  const auto corpus = testing::corpus("hello/corpus");
  const auto adl = testing::adl("hello/helloworld.fractal.xml");
  auto arch = build_architecture(adl, Granularity::PerComponent, std::make_shared<ModuleManager>(), corpus);
  CHECK(arch->mgr->resource_modules().size() == 5);
  CHECK(arch->mgr->info_modules().size() == 3);
  CHECK(arch->assembly.bindings().size() == 2);
  const auto& root = arch->assembly.get(arch->root);
  CHECK(root.name == "HelloWorld");
  CHECK(root.children.size() == 2);
  CHECK(arch->assembly.get(arch->component("server")).content->defined_by() ==
        arch->module_by_label.at("impl(ServerImpl@2.0)"));
  CHECK_NOTHROW(invoke(*arch, "HelloWorld", "r", "run", {}));

  SUBCASE("single loader behaves the same for invocation") {
    auto single = build_architecture(adl, Granularity::SingleLoader, std::make_shared<ModuleManager>(), corpus);
    CHECK(single->mgr->live_modules().size() == 2);
    CHECK_NOTHROW(invoke(*single, "HelloWorld", "r", "run", {}));
    CHECK(invoke(*single, "client", "s", "request", {make_value(*single, "client", "Request")})->rt_type.name() ==
          "ServerImpl");
  }
}

TEST_CASE("instantiate rolls back on failure") {
  const auto full = testing::corpus("hello/corpus");
  const auto adl = testing::adl("hello/helloworld.fractal.xml");
  const auto plan = plan_modules(adl, Granularity::PerComponent, *full);

  // The plan was made against the full corpus; the sabotaged one lacks ServerImpl.
  std::vector<TypeDef> defs;
  for (const auto& [k, d] : full->index())
    if (k.name != "ServerImpl") defs.push_back(d);
  const auto sabotaged = std::make_shared<const CorpusStore>(CorpusStore::from_typedefs(defs));

  auto mgr = std::make_shared<ModuleManager>();
  const auto keep = mgr->create_resource_module({}, full, "bystander");
  const auto before = mgr->live_modules();
  const auto log_before = mgr->event_log().size();
  try {
    instantiate(adl, plan, mgr, sabotaged);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnresolvableExport);
    CHECK(std::string(e.what()).find("ServerImpl") != std::string::npos);
  }
  CHECK(mgr->live_modules() == before);
  CHECK(mgr->is_live(keep));
  const auto log = mgr->event_log();
  CHECK(replay_live_set(log) == before);
  // Added* then the matching Removed* in reverse order.
  std::vector<ModuleEvent> tail(log.begin() + static_cast<long>(log_before), log.end());
  REQUIRE(tail.size() % 2 == 0);
  const auto half = tail.size() / 2;
  REQUIRE(half > 0);
  for (std::size_t i = 0; i < half; ++i) {
    CHECK(tail[i].kind == ModuleEvent::Kind::Added);
    CHECK(tail[tail.size() - 1 - i] == ModuleEvent{ModuleEvent::Kind::Removed, tail[i].id});
  }
}

TEST_CASE("instantiate errors carry the ADL location") {
  const auto corpus = testing::corpus("hello/corpus");
  auto adl = testing::adl("hello/helloworld.fractal.xml");
  auto plan = plan_modules(adl, Granularity::PerComponent, *corpus);
  // Drop the binding's shared interface module from the plan: the server
  // can no longer see Service, so building it fails.
  auto* info = const_cast<PlannedInfo*>(plan.info_for("server"));
  info->imports.erase(std::remove_if(info->imports.begin(), info->imports.end(),
                                     [](const ImportDecl& i) { return i.name == "Service"; }),
                      info->imports.end());
  info->wiring.erase("Service");
  auto mgr = std::make_shared<ModuleManager>();
  try {
    instantiate(adl, plan, mgr, corpus);
    FAIL("expected an error");
  } catch (const Error& e) {
    INFO(std::string(e.what()));
    CHECK(std::string(e.what()).find("in component 'server' at 12:5") != std::string::npos);
  }
  CHECK(mgr->live_modules().empty());
}
