#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "cmodlab/report.hpp"

using namespace cmodlab;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  std::string tag = "/tmp/cmodlab_cli_" + std::to_string(getpid()) + "_" + std::to_string(counter++);
  std::string cmd = env_prefix + std::string(CMODLAB_BIN) + " " + args + " >" + tag + ".out 2>" + tag + ".err";
  int raw = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(tag + ".out");
  r.err = slurp(tag + ".err");
  std::remove((tag + ".out").c_str());
  std::remove((tag + ".err").c_str());
  return r;
}

std::string input(const std::string& name) { return std::string(CMODLAB_INPUTS) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& body) {
  std::string path = "/tmp/cmodlab_fixture_" + std::to_string(getpid()) + "_" + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("report renders the glued pair") {
  CliRun r = run_cli("report " + input("glued_pair.cmod"));
  CHECK(r.code == 0);
  CHECK(r.out.find("phi         2") != std::string::npos);
  CHECK(r.out.find("psi         1") != std::string::npos);
  CHECK(r.out.find("defect      1") != std::string::npos);
  CHECK(r.out.find("C0Direct") != std::string::npos);
}

TEST_CASE("json report matches the in-process computation and round-trips") {
  CliRun r = run_cli("report --json " + input("glued_pair.cmod"));
  REQUIRE(r.code == 0);
  ordered_json j = ordered_json::parse(r.out);
  CHECK(j["schema"] == "cmodlab/1");
  CHECK(j["phi"] == 2);
  CHECK(j["psi"] == 1);
  CHECK(j["eta_val"] == 1);
  CHECK(j["rank"] == 1);
  CHECK(j["defect"] == 1);

  ParsedInput in = load_input(input("glued_pair.cmod"));
  InvariantReport direct = congruence_module(context_from_input(in));
  CHECK(report_from_json(j) == direct);
}

TEST_CASE("json output is byte-identical across runs") {
  CliRun a = run_cli("report --json " + input("hypersurface.cmod"));
  CliRun b = run_cli("report --json " + input("hypersurface.cmod"));
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(!a.out.empty());
}

TEST_CASE("named module blocks are selectable") {
  CliRun p = run_cli("report --json --module P " + input("hypersurface.cmod"));
  REQUIRE(p.code == 0);
  ordered_json jp = ordered_json::parse(p.out);
  CHECK(jp["psi"] == 1);
  CHECK(jp["defect"] == 1);
  CHECK(jp["path"] == "LambdaDescent");

  CliRun i = run_cli("report --json --module I " + input("hypersurface.cmod"));
  REQUIRE(i.code == 0);
  ordered_json ji = ordered_json::parse(i.out);
  CHECK(ji["psi"] == 0);
  CHECK(ji["defect"] == 2);

  CliRun missing = run_cli("report --module nosuch " + input("hypersurface.cmod"));
  CHECK(missing.code == 2);
  CHECK(missing.err.find("no module named") != std::string::npos);
}

TEST_CASE("rejected inputs exit with the parse code") {
  std::string bad = write_temp("nonlocal.cmod", "p = 2\nfiber x\nrel x^2 - x\n");
  CliRun r = run_cli("report " + bad);
  CHECK(r.code == 2);
  CHECK(r.err.find("BadAugmentationForm") != std::string::npos);
  std::remove(bad.c_str());

  CliRun nofile = run_cli("report /tmp/definitely_missing.cmod");
  CHECK(nofile.code == 2);
}

TEST_CASE("verify runs laws and reports per-law lines") {
  CliRun r = run_cli("verify L1,L3 --seed 11 --samples 12");
  CHECK(r.code == 0);
  CHECK(r.out.find("L1  pass") != std::string::npos);
  CHECK(r.out.find("L3  pass") != std::string::npos);
  CHECK(r.out.find("seed 11") != std::string::npos);

  CliRun bad = run_cli("verify L99");
  CHECK(bad.code == 2);
}

TEST_CASE("verify seed comes from the environment unless overridden") {
  CliRun env = run_cli("verify L10 --samples 8", "CMODLAB_SEED=5 ");
  CliRun flag = run_cli("verify L10 --samples 8 --seed 5");
  CHECK(env.code == 0);
  CHECK(env.out == flag.out);
  CliRun override_wins = run_cli("verify L10 --samples 8 --seed 5", "CMODLAB_SEED=junk ");
  CHECK(override_wins.code == 0);
  CHECK(override_wins.out == flag.out);
  CliRun bad_env = run_cli("verify L10 --samples 8", "CMODLAB_SEED=junk ");
  CHECK(bad_env.code == 2);
}

TEST_CASE("deform reports orders and both reports") {
  CliRun r = run_cli("deform " + input("hyper_line.cmod") + " --elem 8*t");
  CHECK(r.code == 0);
  CHECK(r.out.find("orders: 3  (sum 3)") != std::string::npos);
  CHECK(r.out.find("before:") != std::string::npos);
  CHECK(r.out.find("after:") != std::string::npos);
  CHECK(r.out.find("phi         4") != std::string::npos);

  CliRun bad = run_cli("deform " + input("hyper_line.cmod") + " --elem x");
  CHECK(bad.code == 4);
  CHECK(bad.err.find("NotRegularElement") != std::string::npos);
}

TEST_CASE("sweep stabilizes and agrees with the descent path") {
  CliRun r = run_cli("sweep " + input("hyper_line.cmod"));
  CHECK(r.code == 0);
  CHECK(r.out.find("N=20 D=8  estimate 1") != std::string::npos);
  CHECK(r.out.find("paths agree") != std::string::npos);

  CliRun s = run_cli("sweep " + input("series.cmod") + " --N 8 --D 4");
  CHECK(s.code == 0);
  CHECK(s.out.find("paths agree") != std::string::npos);

  CliRun wrong_codim = run_cli("sweep " + input("glued_pair.cmod"));
  CHECK(wrong_codim.code == 4);
}

TEST_CASE("usage errors are nonzero") {
  CliRun none = run_cli("");
  CHECK(none.code != 0);
  CliRun unknown = run_cli("frobnicate");
  CHECK(unknown.code != 0);
}
