// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "cli.hpp"
#include "random_arch.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace reconfig;

namespace {

using Clock = std::chrono::steady_clock;

/// Collects the first few problems of a criterion.
struct Verdict {
  std::vector<std::string> problems;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok && problems.size() < 5) problems.push_back(what);
    if (!ok) ++failures;
  }
  std::size_t failures = 0;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Cli {
  int code;
  std::string out;
  std::string err;
};

Cli cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "reconfig");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& rel) { return testing::fixture(rel).string(); }

template <class F> std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// 1 --------------------------------------------------------------------------

Verdict round_trip() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto corpus = testing::corpus("hello/corpus");
  const auto def = parse_adl(testing::slurp(testing::fixture("hello/helloworld.fractal.xml")));
  v.expect(validate(def, *corpus).empty(), "validate reports diagnostics");
  const auto plan = plan_modules(def, Granularity::PerComponent, *corpus);
  v.expect(plan.resources.size() == 5, "expected 5 resource modules, got " + std::to_string(plan.resources.size()));
  v.expect(plan.infos.size() == 3, "expected 3 info modules, got " + std::to_string(plan.infos.size()));
  auto arch = instantiate(def, plan, std::make_shared<ModuleManager>(), corpus);
  invoke(*arch, "HelloWorld", "r", "run", {});

  std::vector<std::string> stack;
  std::size_t deepest = 0;
  bool nested = true;
  for (const auto& e : arch->trace) {
    if (e.kind == TraceEvent::Kind::Enter) {
      stack.push_back(e.component);
      deepest = std::max(deepest, stack.size());
    } else if (e.kind == TraceEvent::Kind::Exit) {
      nested = nested && !stack.empty() && stack.back() == e.component;
      if (!stack.empty()) stack.pop_back();
    }
  }
  v.expect(nested && stack.empty(), "Enter/Exit events do not nest");
  v.expect(deepest == 3, "trace depth " + std::to_string(deepest));
  v.expect(arch->context.empty(), "context stack not empty after the call");
  const double s = seconds_since(t0);
  v.expect(s < 1.0, "took " + std::to_string(s) + " s");
  v.note = std::to_string(s) + " s";
  return v;
}

// 2 --------------------------------------------------------------------------

Verdict scenarios() {
  Verdict v;
  const auto a = cli_run({"run", fx("push/shared-interface.fractal.xml"), fx("scripts/push-ok.script"), "--corpus",
                          fx("push/corpus")});
  v.expect(a.code == cli::kExitOk, "(a) exit " + std::to_string(a.code));

  const auto b = cli_run({"run", fx("push/private-copies.fractal.xml"), fx("scripts/push-mismatch.script"),
                          "--corpus", fx("push/corpus")});
  v.expect(b.code == cli::kExitOk, "(b) exit " + std::to_string(b.code));
  v.expect(b.out.find("-> TypeMismatch") != std::string::npos, "(b) no TypeMismatch");
  v.expect(b.out.find("Message@") != std::string::npos, "(b) does not name Message");
  v.expect(b.out.find("impl(Producer@1.0)") != std::string::npos &&
               b.out.find("impl(ObjConsumer@1.0)") != std::string::npos,
           "(b) does not name both defining modules");
  const auto unasserted = cli_run({"run", fx("push/private-copies.fractal.xml"), fx("scripts/push-unasserted.script"),
                                   "--corpus", fx("push/corpus")});
  v.expect(unasserted.code == cli::kExitFailure, "(b) unasserted failure exit " + std::to_string(unasserted.code));

  const auto c = cli_run({"run", fx("push/shared-file.fractal.xml"), fx("scripts/push-message-ok.script"), "--corpus",
                          fx("push/corpus")});
  v.expect(c.code == cli::kExitOk, "(c) exit " + std::to_string(c.code));

  // The same call directly: (b) names the two distinct defining modules.
  auto arch = testing::build("push/private-copies.fractal.xml", "push/corpus");
  try {
    invoke_named(*arch, "C1", "out", "push", {"Message"});
    v.expect(false, "(b) runtime call succeeded");
  } catch (const Error& e) {
    v.expect(e.code() == ErrorCode::TypeMismatch && e.details().size() == 3 && e.details()[0] == "Message" &&
                 e.details()[1] != e.details()[2],
             "(b) details " + std::string(e.what()));
  }
  return v;
}

// 3 --------------------------------------------------------------------------

struct GraphSpec {
  std::vector<TypeDef> defs;
  std::vector<std::vector<ExportDecl>> resources;
  struct Info {
    std::vector<ImportDecl> imports;
    std::optional<std::vector<std::size_t>> candidates; // resource indices
  };
  std::vector<Info> infos;
};

GraphSpec random_graph(std::mt19937& rng) {
  const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  GraphSpec g;
  const int types = pick(1, 15);
  std::vector<TypeKey> keys;
  for (int i = 0; i < types; ++i) {
    TypeDef d;
    d.name = "T" + std::to_string(pick(0, 7));
    d.version = VersionTag::parse(std::to_string(pick(1, 2)) + ".0");
    d.kind = pick(0, 1) ? TypeKind::Class : TypeKind::Interface;
    if (std::find(keys.begin(), keys.end(), d.key()) != keys.end()) continue;
    keys.push_back(d.key());
    g.defs.push_back(std::move(d));
  }
  const int total = pick(2, 10);
  const int resources = pick(1, total - 1);
  for (int r = 0; r < resources; ++r) {
    std::vector<ExportDecl> exports;
    std::set<std::string> names;
    for (const auto& k : keys)
      if (pick(0, 2) == 0 && names.insert(k.name).second) exports.push_back({k.name, k.version});
    g.resources.push_back(std::move(exports));
  }
  for (int i = resources; i < total; ++i) {
    GraphSpec::Info info;
    std::set<std::string> names;
    for (const auto& k : keys)
      if (pick(0, 2) == 0 && names.insert(k.name).second) info.imports.push_back({k.name, k.version});
    if (pick(0, 1)) {
      std::vector<std::size_t> cands;
      for (int r = 0; r < resources; ++r)
        if (pick(0, 1)) cands.push_back(static_cast<std::size_t>(r));
      info.candidates = cands;
    }
    g.infos.push_back(std::move(info));
  }
  return g;
}

/// Exhaustive exporter search: index of the unique candidate exporting the
/// import, or the error the policy must raise.
std::variant<std::size_t, ErrorCode> oracle_exporter(const GraphSpec& g, const GraphSpec::Info& info,
                                                     const ImportDecl& imp) {
  std::vector<std::size_t> hits;
  for (std::size_t r = 0; r < g.resources.size(); ++r) {
    if (info.candidates && std::find(info.candidates->begin(), info.candidates->end(), r) == info.candidates->end())
      continue;
    for (const auto& e : g.resources[r])
      if (e.name == imp.name && e.version == imp.version) hits.push_back(r);
  }
  if (hits.empty()) return ErrorCode::MissingImport;
  if (hits.size() > 1) return ErrorCode::AmbiguousImport;
  return hits[0];
}

/// Builds the graph with resource modules created in `order`. Returns, per
/// info module, the wiring as resource indices (or the creation error).
struct Built {
  std::vector<std::variant<std::map<std::string, std::size_t>, ErrorCode>> infos;
};

Built build_graph(const GraphSpec& g, const std::vector<std::size_t>& order, Verdict& v,
                  const std::shared_ptr<const CorpusStore>& corpus, bool deep) {
  ModuleManager mgr;
  std::map<std::size_t, ModuleId> id_of;
  std::map<ModuleId, std::size_t> index_of;
  for (const auto r : order) {
    const auto id = mgr.create_resource_module(g.resources[r], corpus, "r" + std::to_string(r));
    id_of[r] = id;
    index_of[id] = r;
  }
  Built out;
  std::vector<DefinedType> loaded;
  for (const auto& info : g.infos) {
    std::optional<std::vector<ModuleId>> cands;
    if (info.candidates) {
      cands.emplace();
      for (const auto r : *info.candidates) cands->push_back(id_of.at(r));
    }
    try {
      const auto id = mgr.create_info_module(info.imports, cands);
      std::map<std::string, std::size_t> wiring;
      const auto rec = mgr.info(id);
      for (const auto& [name, provider] : rec->wiring) wiring[name] = index_of.at(provider);
      out.infos.emplace_back(wiring);
      if (!deep) continue;
      for (const auto& imp : info.imports) {
        // load_type agrees with the exhaustive search and is cached.
        const auto t = mgr.load_type(id, imp.name);
        const auto expect = oracle_exporter(g, info, imp);
        v.expect(std::holds_alternative<std::size_t>(expect) && t.defined_by() == id_of.at(std::get<std::size_t>(expect)),
                 "load_type " + imp.name + " disagrees with the exporter search");
        const auto again = mgr.load_type(id, imp.name);
        v.expect(again.same_instance(t), "second load of " + imp.name + " is a new instance");
        const auto res = mgr.resource(t.defined_by());
        v.expect(res && res->defined.count(imp.name) == 1, "cache entry missing for " + imp.name);
        v.expect(t.def().key() == imp.key(), "loaded the wrong definition of " + imp.name);
        loaded.push_back(t);
      }
    } catch (const Error& e) {
      out.infos.emplace_back(e.code());
      if (deep) {
        // The policy fails exactly when some import has zero or several
        // exporters; imports resolve in name order.
        auto sorted = info.imports;
        std::sort(sorted.begin(), sorted.end());
        std::optional<ErrorCode> first;
        for (const auto& imp : sorted) {
          const auto r = oracle_exporter(g, info, imp);
          if (std::holds_alternative<ErrorCode>(r)) {
            first = std::get<ErrorCode>(r);
            break;
          }
        }
        v.expect(first.has_value(), std::string("unexpected ") + std::string(to_string(e.code())));
        v.expect(!first || *first == e.code(), "policy raised " + std::string(to_string(e.code())));
      }
    }
  }
  if (deep) {
    // same_type is an equivalence relation and equals pair equality.
    for (const auto& a : loaded)
      for (const auto& b : loaded) {
        v.expect(same_type(a, a), "same_type not reflexive");
        v.expect(same_type(a, b) == same_type(b, a), "same_type not symmetric");
        v.expect(same_type(a, b) == (a.name() == b.name() && a.defined_by() == b.defined_by()),
                 "same_type differs from (name, module) equality");
        if (!same_type(a, b)) continue;
        for (const auto& c : loaded)
          if (same_type(b, c)) v.expect(same_type(a, c), "same_type not transitive");
      }
  }
  return out;
}

Verdict identity_suite() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937 rng(20240101);
  std::size_t wired = 0, rejected = 0;
  for (int round = 0; round < 1000; ++round) {
    const auto g = random_graph(rng);
    const auto corpus = std::make_shared<const CorpusStore>(CorpusStore::from_typedefs(g.defs));
    std::vector<std::size_t> order(g.resources.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto base = build_graph(g, order, v, corpus, true);
    std::shuffle(order.begin(), order.end(), rng);
    const auto permuted = build_graph(g, order, v, corpus, false);
    v.expect(base.infos == permuted.infos, "wiring depends on insertion order (round " + std::to_string(round) + ")");
    for (const auto& i : base.infos) (std::holds_alternative<ErrorCode>(i) ? rejected : wired)++;
  }
  const double s = seconds_since(t0);
  v.expect(s < 10.0, "took " + std::to_string(s) + " s");
  v.expect(wired > 0 && rejected > 0, "generator does not exercise both outcomes");
  v.note = std::to_string(wired) + " wired, " + std::to_string(rejected) + " rejected info modules; " +
           std::to_string(s) + " s";
  return v;
}

// 4 --------------------------------------------------------------------------

Verdict hot_swap() {
  Verdict v;
  auto arch = testing::build("evolved/helloworld-v1.fractal.xml", "evolved/corpus");
  const auto server = arch->component("server");
  const auto before_bindings = arch->assembly.bindings();
  const auto old_content = *arch->assembly.get(server).content;
  const auto rec = swap_implementation(*arch, "server", TypeRef::parse("ServerImpl@2.0"));

  const auto result = invoke_named(*arch, "client", "s", "request", {"Request"});
  v.expect(result.has_value(), "post-swap call returned nothing");
  v.expect(result && result->rt_type.defined_by() == rec.new_module, "returned value is not from the new module");
  v.expect(code_of([&] { invoke(*arch, "HelloWorld", "r", "run", {}); }) == std::nullopt, "post-swap run failed");
  v.expect(arch->mgr->is_live(old_content.defined_by()), "old module was unloaded");
  const auto old_mod = arch->mgr->resource(old_content.defined_by());
  v.expect(old_mod && old_mod->defined.count("ServerImpl") && same_type(old_mod->defined.at("ServerImpl"), old_content),
           "old DefinedType no longer held");
  v.expect(!same_type(rec.old_content, rec.new_content), "same_type(old, new) is true");

  // Every pre-swap binding is still type-safe: re-check it from scratch
  // after detaching it, then restore it.
  for (const auto& [id, b] : before_bindings) {
    v.expect(arch->assembly.binding(id) != nullptr, "pre-swap binding vanished");
    v.expect(arch->assembly.broken_bindings(*arch->mgr).empty(), "a binding is broken after the swap");
  }
  for (const auto& [id, b] : before_bindings) {
    const auto client = b.client;
    const auto srv = b.server;
    arch->assembly.unbind(arch->assembly.binding_from(client)->id);
    const auto err = arch->assembly.check_binding(client, srv, *arch->mgr);
    v.expect(!err, "check_binding " + arch->assembly.port_name(client) + ": " + (err ? err->what() : ""));
    arch->assembly.bind(client, srv, *arch->mgr);
  }

  auto single = testing::build("evolved/helloworld-v1.fractal.xml", "evolved/corpus", Granularity::SingleLoader);
  v.expect(code_of([&] { swap_implementation(*single, "server", TypeRef::parse("ServerImpl@2.0")); }) ==
               ErrorCode::GranularityForbidsSwap,
           "single-loader swap not rejected");
  return v;
}

// 5 --------------------------------------------------------------------------

Verdict atomicity() {
  Verdict v;
  std::mt19937 rng(777);
  const auto corpus = testing::synthetic_corpus();
  std::map<std::string, int> kinds;
  int failed = 0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const auto def = testing::random_adl(rng);
    const int kind = attempt % 3;
    if (kind == 0) {
      // instantiate against a corpus missing one planned type
      const auto plan = plan_modules(def, Granularity::PerComponent, *corpus);
      std::vector<std::string> used;
      for (const auto& r : plan.resources)
        for (const auto& e : r.exports) used.push_back(e.name);
      const auto victim = used[rng() % used.size()];
      std::vector<TypeDef> defs;
      for (const auto& [k, d] : corpus->index())
        if (k.name != victim) defs.push_back(d);
      const auto sabotaged = std::make_shared<const CorpusStore>(CorpusStore::from_typedefs(defs));
      auto mgr = std::make_shared<ModuleManager>();
      mgr->create_resource_module({ExportDecl{"D1", VersionTag::parse("1.0")}}, corpus, "bystander");
      const auto live = mgr->live_modules();
      const auto report = mgr->report();
      const auto err = code_of([&] { instantiate(def, plan, mgr, sabotaged); });
      v.expect(err.has_value(), "sabotaged instantiate succeeded");
      v.expect(replay_live_set(mgr->event_log()) == live, "instantiate: replay differs from the live set before");
      v.expect(mgr->report() == report, "instantiate: module report changed");
      failed += err.has_value();
      ++kinds["instantiate"];
      continue;
    }

    auto arch = build_architecture(def, Granularity::PerComponent, std::make_shared<ModuleManager>(), corpus);
    const auto live = arch->mgr->live_modules();
    const auto report = arch->report();
    std::optional<ErrorCode> err;
    const auto& c = def.components[rng() % def.components.size()];
    if (kind == 1) {
      // rebind a client port to a server of another signature, an unknown
      // port, or its own component's port of the wrong role
      std::vector<std::pair<PortRef, PortRef>> bad;
      for (const auto& a : def.components)
        for (const auto& p : a.interfaces) {
          const auto from = arch->endpoint(AdlEndpoint{a.name, p.name});
          for (const auto& b : def.components)
            for (const auto& q : b.interfaces) {
              const auto to = arch->endpoint(AdlEndpoint{b.name, q.name});
              if (p.role == Role::Client && q.role == Role::Server && p.signature == q.signature) continue;
              bad.emplace_back(from, to);
            }
          bad.emplace_back(from, PortRef{from.owner, "missing"});
        }
      const auto& [from, to] = bad[rng() % bad.size()];
      err = code_of([&] { rebind(*arch, from, to); });
      ++kinds["rebind"];
    } else {
      const std::vector<std::function<void()>> swaps{
          [&] { swap_implementation(*arch, c.name, TypeRef::parse("S1@1.0")); },
          [&] { swap_implementation(*arch, c.name, TypeRef::parse("D1@1.0")); },
          [&] { swap_implementation(*arch, c.name, TypeRef::parse("Impl1@7.0")); },
          [&] { swap_implementation(*arch, def.name, TypeRef::parse("Impl1@1.0")); },
          [&] {
            std::vector<TypeDef> defs;
            for (const auto& [k, d] : corpus->index())
              if (k.name != "Impl2") defs.push_back(d);
            swap_implementation(*arch, c.name, TypeRef::parse("Impl2@1.0"),
                                std::make_shared<const CorpusStore>(CorpusStore::from_typedefs(defs)));
          },
      };
      err = code_of(swaps[rng() % swaps.size()]);
      ++kinds["swap"];
    }
    v.expect(err.has_value(), "injected failure did not fail");
    v.expect(replay_live_set(arch->mgr->event_log()) == live, "replay differs from the live set before");
    v.expect(arch->report() == report, "architecture report changed");
    failed += err.has_value();
  }
  v.note = std::to_string(failed) + " failures (" + std::to_string(kinds["instantiate"]) + " instantiate, " +
           std::to_string(kinds["rebind"]) + " rebind, " + std::to_string(kinds["swap"]) + " swap)";
  return v;
}

// 6 --------------------------------------------------------------------------

Verdict fuzz() {
  Verdict v;
  const auto text = testing::slurp(testing::fixture("hello/helloworld.fractal.xml"));
  const std::string alphabet = "<>/=\"' \n\t.-_&;#!?abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789\x01\xff";
  std::mt19937 rng(99);
  std::size_t parsed = 0;
  for (int i = 0; i < 10000; ++i) {
    auto m = text;
    const auto pos = rng() % (m.size() + 1);
    const char ch = alphabet[rng() % alphabet.size()];
    switch (rng() % 3) {
    case 0:
      if (pos < m.size()) m[pos] = ch;
      break;
    case 1:
      m.insert(m.begin() + static_cast<long>(pos), ch);
      break;
    default:
      if (pos < m.size()) m.erase(pos, 1);
    }
    try {
      const auto def = parse_adl(m);
      ++parsed;
      const auto bad = adl_invariant_violations(def);
      v.expect(bad.empty(), "mutation " + std::to_string(i) + ": " + (bad.empty() ? "" : bad[0]));
      v.expect(parse_adl(print_adl(def)) == def, "mutation " + std::to_string(i) + " does not round-trip");
    } catch (const Error&) {
    } catch (const std::exception& e) {
      v.expect(false, "mutation " + std::to_string(i) + " escaped with " + e.what());
    }
  }
  v.note = std::to_string(parsed) + " of 10000 mutants parsed";
  return v;
}

// 7 --------------------------------------------------------------------------

Verdict bench() {
  Verdict v;
  // Each hop enters and exits one component and checks its one Token
  // argument.
  constexpr std::uint64_t kOpsPerHop = 3;
  constexpr std::uint64_t kCalls = 50;
  std::ostringstream sizes;
  for (int depth = 1; depth <= 5; ++depth) {
    auto arch = testing::build("chain/chain" + std::to_string(depth) + ".fractal.xml", "chain/corpus");
    const auto r = bench_interception(*arch, kCalls);
    const auto expected = kOpsPerHop * static_cast<std::uint64_t>(depth) * kCalls;
    v.expect(r.bookkeeping_ops == expected, "depth " + std::to_string(depth) + ": " +
                                                std::to_string(r.bookkeeping_ops) + " ops, expected " +
                                                std::to_string(expected));
    const auto text = r.str();
    v.expect(!text.empty() && text.find('%') == std::string::npos, "report missing or asserts a percentage");
    sizes << (depth > 1 ? " " : "") << r.ops_per_call;
  }
  v.note = "ops/call " + sizes.str();
  return v;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 architecture example round-trip", round_trip},
      {"2 exchange scenarios", scenarios},
      {"3 type identity properties", identity_suite},
      {"4 hot swap", hot_swap},
      {"5 atomicity under injected failures", atomicity},
      {"6 ADL mutation fuzz", fuzz},
      {"7 bench bookkeeping", bench},
  };
  int failing = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.expect(false, std::string("uncaught: ") + e.what());
    }
    const bool ok = v.failures == 0;
    failing += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!v.note.empty()) std::cout << " (" << v.note << ")";
    std::cout << '\n';
    for (const auto& p : v.problems) std::cout << "    " << p << '\n';
  }
  return failing == 0 ? 0 : 1;
}
