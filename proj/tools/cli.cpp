#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace reconfig::cli {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), {path.string()});
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::shared_ptr<const CorpusStore> load_corpus(const Options& opts) {
  std::filesystem::path root;
  if (opts.corpus) {
    root = *opts.corpus;
  } else if (const char* env = std::getenv("RECONFIG_CORPUS"); env && *env) {
    root = env;
  } else {
    throw Error(ErrorCode::InvalidArgument, "no corpus given (use --corpus or RECONFIG_CORPUS)");
  }
  return std::make_shared<const CorpusStore>(CorpusStore::load(root));
}

AdlDefinition load_adl(const Options& opts) {
  try {
    return parse_adl(read_file(opts.adl));
  } catch (Error& e) {
    throw e.with_context(opts.adl.string());
  }
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

PortRef endpoint(const Architecture& arch, const std::string& text) {
  const auto ep = AdlEndpoint::parse(text);
  if (!ep) throw Error(ErrorCode::InvalidArgument, "bad endpoint '" + text + "' (expected comp.port)", {text});
  return arch.endpoint(*ep);
}

std::string first_line(const Error& e) { return std::string(e.code_name()) + ": " + e.message(); }

/// Executes one script command, returning a short result description.
std::string execute(Architecture& arch, const ScriptCommand& cmd) {
  using K = ScriptCommand::Kind;
  switch (cmd.kind) {
  case K::Invoke: {
    const auto ref = endpoint(arch, cmd.args[0]);
    const std::vector<std::string> types(cmd.args.begin() + 2, cmd.args.end());
    const auto result = invoke_named(arch, arch.assembly.get(ref.owner).name, ref.port, cmd.args[1], types);
    return result ? "returns " + result->rt_type.str() : "returns void";
  }
  case K::Swap: {
    const auto rec = swap_implementation(arch, cmd.args[0], TypeRef{cmd.args[1], VersionTag::parse(cmd.args[2])});
    return rec.old_content.str() + " -> " + rec.new_content.str();
  }
  case K::Bind:
    rebind(arch, endpoint(arch, cmd.args[0]), endpoint(arch, cmd.args[1]));
    return "bound";
  case K::Unbind:
    unbind(arch, endpoint(arch, cmd.args[0]));
    return "unbound";
  case K::Add: {
    const auto component = parse_adl_component(cmd.args[0]);
    add_component(arch, component);
    return "added " + component.name;
  }
  case K::Remove:
    remove_component(arch, cmd.args[0]);
    return "removed " + cmd.args[0];
  case K::ExpectOk:
  case K::ExpectError:
    break;
  }
  return {};
}

bool is_expect(const ScriptCommand& c) {
  return c.kind == ScriptCommand::Kind::ExpectOk || c.kind == ScriptCommand::Kind::ExpectError;
}

} // namespace

std::vector<ScriptCommand> parse_script(std::string_view text) {
  using K = ScriptCommand::Kind;
  std::vector<ScriptCommand> commands;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::ParseError, "script line " + std::to_string(line_no) + ": " + why,
                   {std::to_string(line_no), line});
    };
    ScriptCommand cmd;
    cmd.line = line_no;
    cmd.text = line;
    const auto space = line.find_first_of(" \t");
    const auto verb = line.substr(0, space);
    const auto rest = space == std::string::npos ? std::string() : trim(std::string_view(line).substr(space));
    auto words = split_words(rest);
    const auto arity = [&](std::size_t lo, std::size_t hi) {
      if (words.size() < lo || words.size() > hi) throw fail("wrong number of arguments to " + verb);
    };
    const auto endpoint = [&](std::size_t i) {
      if (!AdlEndpoint::parse(words[i])) throw fail("'" + words[i] + "' is not comp.port");
    };
    if (verb == "invoke") {
      cmd.kind = K::Invoke;
      arity(2, SIZE_MAX);
      endpoint(0);
    } else if (verb == "swap") {
      cmd.kind = K::Swap;
      arity(3, 3);
      if (!VersionTag::try_parse(words[2])) throw fail("bad version '" + words[2] + "'");
    } else if (verb == "bind") {
      cmd.kind = K::Bind;
      arity(2, 2);
      endpoint(0);
      endpoint(1);
    } else if (verb == "unbind") {
      cmd.kind = K::Unbind;
      arity(1, 1);
      endpoint(0);
    } else if (verb == "add") {
      cmd.kind = K::Add;
      if (rest.empty()) throw fail("add needs an inline <component> element");
      words = {rest};
    } else if (verb == "remove") {
      cmd.kind = K::Remove;
      arity(1, 1);
    } else if (verb == "expect-ok") {
      cmd.kind = K::ExpectOk;
      arity(0, 0);
    } else if (verb == "expect-error") {
      cmd.kind = K::ExpectError;
      arity(1, 1);
    } else {
      throw fail("unknown command '" + verb + "'");
    }
    if (is_expect(cmd) && (commands.empty() || is_expect(commands.back())))
      throw fail(verb + " must follow a command");
    cmd.args = std::move(words);
    commands.push_back(std::move(cmd));
  }
  return commands;
}

int cmd_check(const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto def = load_adl(opts);
    const auto corpus = load_corpus(opts);
    const auto diags = validate(def, *corpus);
    for (const auto& d : diags) out << d.str() << '\n';
    if (!diags.empty()) return kExitFailure;
    out << "ok\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetup;
  }
}

int cmd_plan(const Options& opts, std::ostream& out, std::ostream& err) {
  AdlDefinition def;
  std::shared_ptr<const CorpusStore> corpus;
  try {
    def = load_adl(opts);
    corpus = load_corpus(opts);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetup;
  }
  try {
    out << plan_modules(def, opts.granularity, *corpus).report();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& d : e.details()) err << "  " << d << '\n';
    return e.code() == ErrorCode::VersionConflict || e.code() == ErrorCode::InvalidDefinition ? kExitFailure
                                                                                              : kExitSetup;
  }
}

int cmd_run(const Options& opts, const std::filesystem::path& script,
            const std::optional<std::filesystem::path>& trace, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Architecture> arch;
  std::vector<ScriptCommand> commands;
  try {
    commands = parse_script(read_file(script));
    const auto def = load_adl(opts);
    const auto corpus = load_corpus(opts);
    arch = build_architecture(def, opts.granularity, std::make_shared<ModuleManager>(), corpus);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetup;
  }

  int status = kExitOk;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& cmd = commands[i];
    std::optional<Error> failure;
    std::string result;
    try {
      result = execute(*arch, cmd);
    } catch (const Error& e) {
      failure = e;
    }
    out << "L" << cmd.line << ": " << cmd.text << " -> " << (failure ? first_line(*failure) : "ok " + result)
        << '\n';

    const ScriptCommand* expect = i + 1 < commands.size() && is_expect(commands[i + 1]) ? &commands[i + 1] : nullptr;
    std::string problem;
    if (!expect) {
      if (failure) problem = "unexpected " + std::string(failure->code_name());
    } else {
      ++i;
      ++checked;
      if (expect->kind == ScriptCommand::Kind::ExpectOk) {
        if (failure) problem = "expected ok, got " + std::string(failure->code_name());
      } else if (!failure) {
        problem = "expected " + expect->args[0] + ", got ok";
      } else if (failure->code_name() != expect->args[0]) {
        problem = "expected " + expect->args[0] + ", got " + std::string(failure->code_name());
      }
    }
    if (!problem.empty()) {
      err << script.string() << ":" << cmd.line << ": assertion failed: " << problem << '\n';
      if (failure) err << failure->what() << '\n';
      status = kExitFailure;
      break;
    }
  }

  if (trace) {
    std::ofstream t(*trace, std::ios::binary);
    if (!t) {
      err << "error: cannot write trace to " << trace->string() << '\n';
      return kExitSetup;
    }
    t << arch->trace_text();
  }
  if (status == kExitOk) out << checked << " assertion(s) passed\n";
  return status;
}

int cmd_bench(const Options& opts, std::uint64_t calls, const std::optional<std::string>& entry,
              const std::optional<std::string>& method, std::ostream& out, std::ostream& err) {
  try {
    const auto def = load_adl(opts);
    const auto corpus = load_corpus(opts);
    auto arch = build_architecture(def, opts.granularity, std::make_shared<ModuleManager>(), corpus);
    std::optional<BenchEntry> target;
    if (entry) {
      const auto ref = endpoint(*arch, *entry);
      const auto& c = arch->assembly.get(ref.owner);
      std::string m;
      if (method) {
        m = *method;
      } else {
        const auto sig = arch->mgr->load_type(c.info_module, arch->assembly.port(ref).signature);
        if (sig.def().methods.empty())
          throw Error(ErrorCode::InvalidArgument, *entry + " has no methods to call", {*entry});
        m = sig.def().methods.front().name;
      }
      target = BenchEntry{c.name, ref.port, m};
    } else if (method) {
      target = default_bench_entry(*arch);
      target->method = *method;
    }
    const auto report = bench_interception(*arch, calls, target);
    out << report.str();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetup;
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loads component architectures through versioned module graphs"};
  app.name(argc > 0 ? std::filesystem::path(argv[0]).filename().string() : "reconfig");
  app.require_subcommand(1);

  Options opts;
  std::string corpus;
  std::string granularity = "per-component";
  const auto common = [&](CLI::App* sub) {
    sub->add_option("adl", opts.adl, "Architecture description (XML)")->required();
    sub->add_option("--corpus", corpus, "Typedef corpus directory (default: $RECONFIG_CORPUS)");
    sub->add_option("--granularity", granularity, "single or per-component")->capture_default_str();
  };

  auto* check = app.add_subcommand("check", "Parse and validate a description");
  common(check);
  auto* plan = app.add_subcommand("plan", "Print the module plan");
  common(plan);
  auto* run = app.add_subcommand("run", "Instantiate and execute a script");
  common(run);
  std::filesystem::path script;
  std::string trace;
  run->add_option("script", script, "Script file")->required();
  run->add_option("--trace", trace, "Write the invocation trace to this file");
  auto* bench = app.add_subcommand("bench", "Count interceptor operations over repeated calls");
  common(bench);
  std::uint64_t calls = 1000;
  std::string entry, method;
  bench->add_option("-n", calls, "Number of calls")->capture_default_str();
  bench->add_option("--entry", entry, "Entry port as comp.port");
  bench->add_option("--method", method, "Method to call");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitSetup;
  }

  try {
    opts.granularity = parse_granularity(granularity);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitSetup;
  }
  if (!corpus.empty()) opts.corpus = corpus;

  if (*check) return cmd_check(opts, out, err);
  if (*plan) return cmd_plan(opts, out, err);
  if (*run) return cmd_run(opts, script, trace.empty() ? std::nullopt : std::optional<std::filesystem::path>(trace),
                           out, err);
  return cmd_bench(opts, calls, entry.empty() ? std::nullopt : std::optional<std::string>(entry),
                   method.empty() ? std::nullopt : std::optional<std::string>(method), out, err);
}

} // namespace reconfig::cli
