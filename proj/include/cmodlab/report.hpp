#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmodlab/error.hpp"
#include "cmodlab/invariants.hpp"
#include "cmodlab/parser.hpp"

namespace cmodlab {

using ordered_json = nlohmann::ordered_json;

/// Build the computation context for a parsed input: the declared structure
/// when one is present, otherwise the structure derived from the presentation.
inline MemberContext context_from_input(const ParsedInput& in,
                                        const std::string& module_name = "") {
  LambdaStructure L =
      in.lambda ? *in.lambda : derive_lambda_structure(in.algebra, in.trunc);
  LambdaModule m = regular_module(L);
  if (!module_name.empty()) {
    bool found = false;
    for (const auto& raw : in.modules)
      if (raw.name == module_name) {
        m = resolve_module(raw, L);
        found = true;
      }
    require(found, ErrKind::Parse, "no module named '" + module_name + "' in the input");
  }
  return make_context(in.algebra, L, m);
}

inline Path path_from_name(const std::string& name) {
  for (Path p : {Path::C0Direct, Path::LambdaDescent, Path::KoszulRegular,
                 Path::Ext1Truncated})
    if (name == path_name(p)) return p;
  fail(ErrKind::Parse, "unknown computation path '" + name + "'");
}

inline ordered_json fg_to_json(const FgOModule& m) {
  ordered_json j;
  j["free"] = m.free_rank;
  j["torsion"] = m.torsion_exponents;
  return j;
}

inline FgOModule fg_from_json(const ordered_json& j) {
  FgOModule m;
  m.free_rank = j.at("free").get<long>();
  m.torsion_exponents = j.at("torsion").get<std::vector<long>>();
  return m;
}

inline ordered_json report_to_json(const InvariantReport& r,
                                   const std::vector<std::string>& flags = {}) {
  ordered_json j;
  j["schema"] = "cmodlab/1";
  j["phi"] = r.phi_length;
  j["psi"] = r.psi_length;
  if (r.eta_valuation)
    j["eta_val"] = *r.eta_valuation;
  else
    j["eta_val"] = nullptr;
  j["rank"] = r.rank_lambda;
  j["defect"] = r.defect;
  j["path"] = path_name(r.path);
  j["codim"] = r.codim;
  j["coker"] = r.coker_length;
  j["flags"] = flags;
  if (r.fiber) {
    ordered_json f;
    f["psi"] = fg_to_json(r.fiber->psi);
    f["psi_length"] = r.fiber->psi_length;
    if (r.fiber->eta_valuation)
      f["eta_val"] = *r.fiber->eta_valuation;
    else
      f["eta_val"] = nullptr;
    f["mu"] = r.fiber->mu;
    f["nu"] = r.fiber->nu;
    f["rank"] = r.fiber->rank_lambda;
    f["phi"] = r.fiber->phi_length;
    j["fiber"] = f;
  } else {
    j["fiber"] = nullptr;
  }
  return j;
}

inline InvariantReport report_from_json(const ordered_json& j) {
  require(j.contains("schema") && j.at("schema").get<std::string>() == "cmodlab/1",
          ErrKind::Parse, "unsupported report schema");
  InvariantReport r;
  r.phi_length = j.at("phi").get<long>();
  r.psi_length = j.at("psi").get<long>();
  if (!j.at("eta_val").is_null()) r.eta_valuation = j.at("eta_val").get<long>();
  r.rank_lambda = j.at("rank").get<long>();
  r.defect = j.at("defect").get<long>();
  r.path = path_from_name(j.at("path").get<std::string>());
  r.codim = j.at("codim").get<long>();
  r.coker_length = j.at("coker").get<long>();
  if (!j.at("fiber").is_null()) {
    const ordered_json& f = j.at("fiber");
    C0Summary s;
    s.psi = fg_from_json(f.at("psi"));
    s.psi_length = f.at("psi_length").get<long>();
    if (!f.at("eta_val").is_null()) s.eta_valuation = f.at("eta_val").get<long>();
    s.mu = f.at("mu").get<long>();
    s.nu = f.at("nu").get<long>();
    s.rank_lambda = f.at("rank").get<long>();
    s.phi_length = f.at("phi").get<long>();
    r.fiber = s;
  }
  return r;
}

inline std::string render_fg(const FgOModule& m, long p) {
  std::ostringstream os;
  bool first = true;
  if (m.free_rank > 0) {
    os << "O^" << m.free_rank;
    first = false;
  }
  for (long e : m.torsion_exponents) {
    if (!first) os << " + ";
    os << "O/" << p << "^" << e;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

inline std::string render_report(const InvariantReport& r, long p,
                                 const std::vector<std::string>& flags = {}) {
  std::ostringstream os;
  auto line = [&os](const std::string& k, const std::string& v) {
    os << "  " << k;
    for (size_t i = k.size(); i < 12; ++i) os << ' ';
    os << v << "\n";
  };
  line("phi", std::to_string(r.phi_length));
  line("psi", std::to_string(r.psi_length));
  line("eta_val", r.eta_valuation ? std::to_string(*r.eta_valuation) : "-");
  line("rank", std::to_string(r.rank_lambda));
  line("defect", std::to_string(r.defect));
  line("path", path_name(r.path));
  line("codim", std::to_string(r.codim));
  line("coker", std::to_string(r.coker_length));
  if (!flags.empty()) {
    std::string fl;
    for (const auto& f : flags) {
      if (!fl.empty()) fl += " ";
      fl += f;
    }
    line("flags", fl);
  }
  if (r.fiber) {
    os << "  fiber:\n";
    line("  psi", render_fg(r.fiber->psi, p));
    line("  eta_val",
         r.fiber->eta_valuation ? std::to_string(*r.fiber->eta_valuation) : "-");
    line("  mu", std::to_string(r.fiber->mu));
    line("  nu", std::to_string(r.fiber->nu));
    line("  rank", std::to_string(r.fiber->rank_lambda));
    line("  phi", std::to_string(r.fiber->phi_length));
  }
  return os.str();
}

}  // namespace cmodlab
