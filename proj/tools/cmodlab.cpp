#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmodlab/ext1.hpp"
#include "cmodlab/laws.hpp"
#include "cmodlab/parser.hpp"
#include "cmodlab/report.hpp"

namespace {

using namespace cmodlab;

int cmd_report(const std::string& file, const std::string& module_name, bool as_json) {
  ParsedInput in = load_input(file);
  MemberContext ctx = context_from_input(in, module_name);
  InvariantReport r = congruence_module(ctx);
  if (as_json)
    std::cout << report_to_json(r, ctx.a.flags).dump(2) << "\n";
  else
    std::cout << render_report(r, ctx.a.p, ctx.a.flags);
  return 0;
}

uint64_t verify_seed(const std::optional<uint64_t>& from_flag) {
  if (from_flag) return *from_flag;
  if (const char* env = std::getenv("CMODLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      fail(ErrKind::Parse, std::string("CMODLAB_SEED is not an integer: '") + env + "'");
    }
  }
  return 2026;
}

int cmd_verify(const std::string& law_spec, const std::optional<uint64_t>& seed_flag, long samples) {
  require(samples >= 1, ErrKind::Parse, "--samples must be positive");
  const uint64_t seed = verify_seed(seed_flag);
  const std::vector<std::string> ids = parse_law_ids(law_spec);
  std::cout << "seed " << seed << ", " << samples << " members per law\n";
  Corpus corpus = build_corpus(seed, samples);
  bool ok = true;
  for (const std::string& id : ids) {
    LawResult r = run_law(id, corpus);
    std::string summary;
    for (const LawInfo& info : law_table())
      if (id == info.id) summary = info.summary;
    std::cout << r.id << (r.id.size() < 3 ? "  " : " ") << (r.pass() ? "pass" : "FAIL")
              << "  " << r.samples << " exercised  " << summary << "\n";
    for (const std::string& f : r.failures) std::cout << "    " << f << "\n";
    ok = ok && r.pass();
  }
  if (!ok) {
    std::cout << "law failures detected\n";
    return 5;
  }
  return 0;
}

int cmd_deform(const std::string& file, const std::string& module_name,
               const std::vector<std::string>& elems) {
  ParsedInput in = load_input(file);
  MemberContext ctx = context_from_input(in, module_name);
  std::vector<Poly> fs;
  for (const std::string& text : elems) fs.push_back(parse_poly(text, ctx.a.vars));
  DeformResult dr = deform(ctx, fs);
  std::cout << "orders:";
  for (long o : dr.step.orders) std::cout << " " << o;
  std::cout << "  (sum " << dr.step.sum_ord << ")\n";
  std::cout << "before:\n" << render_report(dr.before, ctx.a.p, ctx.a.flags);
  std::cout << "after:\n" << render_report(dr.after, ctx.a.p, ctx.a.flags);
  return 0;
}

int cmd_sweep(const std::string& file, const std::string& module_name, long n, long d) {
  ParsedInput in = load_input(file);
  MemberContext ctx = context_from_input(in, module_name);
  TruncationContext tc;
  tc.n = n;
  tc.d = d;
  SweepResult s = ext1_sweep(ctx, tc);
  for (const SweepRow& row : s.rows) {
    std::cout << "N=" << row.n << " D=" << row.d << "  estimate ";
    if (row.estimate)
      std::cout << *row.estimate;
    else
      std::cout << "-";
    std::cout << "\n";
  }
  if (!s.stabilized) {
    std::cout << "no stable estimate within the escalation budget\n";
    return exit_code(ErrKind::PrecisionExhausted);
  }
  std::cout << "stable at N=" << s.n << " D=" << s.d << ": length " << s.length << "\n";
  InvariantReport r = congruence_module(ctx);
  std::cout << "descent path psi: " << r.psi_length << "\n";
  if (s.length != r.psi_length) {
    std::cout << "paths disagree\n";
    return 4;
  }
  std::cout << "paths agree\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact congruence invariants of augmented algebras over Z_(p)"};
  app.require_subcommand(1);

  std::string rep_file, rep_module;
  bool rep_json = false;
  CLI::App* rep = app.add_subcommand("report", "compute the invariant report of one member");
  rep->add_option("file", rep_file, "member description")->required();
  rep->add_option("--module", rep_module, "named module block (default: the member itself)");
  rep->add_flag("--json", rep_json, "machine-readable output");

  std::string law_spec;
  std::optional<uint64_t> seed_flag;
  long samples = 200;
  CLI::App* ver = app.add_subcommand("verify", "check law suites over generated members");
  ver->add_option("laws", law_spec, "law ids, e.g. L3 or L1-L12 or L2,L5")->required();
  ver->add_option("--seed", seed_flag, "corpus seed (overrides CMODLAB_SEED)");
  ver->add_option("--samples", samples, "members per law (default 200)");

  std::string def_file, def_module;
  std::vector<std::string> elems;
  CLI::App* def = app.add_subcommand("deform", "pass to a quotient and recompute");
  def->add_option("file", def_file, "member description")->required();
  def->add_option("--module", def_module, "named module block");
  def->add_option("--elem", elems, "augmentation-ideal element (repeatable)")->required();

  std::string sw_file, sw_module;
  long sw_n = 20, sw_d = 8;
  CLI::App* sw = app.add_subcommand("sweep", "cross-check psi by truncated Ext^1 estimates");
  sw->add_option("file", sw_file, "member description")->required();
  sw->add_option("--module", sw_module, "named module block");
  sw->add_option("--N", sw_n, "initial coefficient precision (default 20)");
  sw->add_option("--D", sw_d, "initial degree bound (default 8)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rep->parsed()) return cmd_report(rep_file, rep_module, rep_json);
    if (ver->parsed()) return cmd_verify(law_spec, seed_flag, samples);
    if (def->parsed()) return cmd_deform(def_file, def_module, elems);
    if (sw->parsed()) return cmd_sweep(sw_file, sw_module, sw_n, sw_d);
  } catch (const cmodlab::CmodError& e) {
    std::cerr << e.what() << "\n";
    return cmodlab::exit_code(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
