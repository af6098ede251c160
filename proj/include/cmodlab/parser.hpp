#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmodlab/lambda_structure.hpp"

namespace cmodlab {

/// Module block as written in the input file: action matrices keyed by basis label.
struct RawModuleBlock {
  std::string name;
  std::vector<std::pair<std::string, std::vector<std::vector<Poly>>>> act;
};

struct ParsedInput {
  AugmentedAlgebra algebra;
  std::optional<LambdaStructure> lambda;
  std::vector<RawModuleBlock> modules;
  long trunc = 8;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Logical lines: physical lines minus comments, then split on ';' at bracket depth 0.
inline std::vector<std::string> logical_lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  long depth = 0;
  std::istringstream in(text);
  std::string phys;
  while (std::getline(in, phys)) {
    size_t hash = phys.find('#');
    if (hash != std::string::npos) phys.erase(hash);
    for (char ch : phys) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (ch == ';' && depth == 0) {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ' ';
    }
  }
  out.push_back(trim(cur));
  std::vector<std::string> nonempty;
  for (auto& l : out)
    if (!l.empty()) nonempty.push_back(l);
  return nonempty;
}

inline std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> names;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) names.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return names;
}

/// Split "a, b, c" at top-level commas (depth-aware for nested brackets/parens).
inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  long depth = 0;
  for (char ch : s) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == sep && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

/// Strip one layer of enclosing brackets: "[a, b]" -> "a, b".
inline std::string unbracket(const std::string& s, const std::string& what) {
  std::string t = trim(s);
  require(t.size() >= 2 && t.front() == '[' && t.back() == ']', ErrKind::Parse,
          what + " must be enclosed in [ ... ]: got '" + s + "'");
  return t.substr(1, t.size() - 2);
}

inline std::vector<Poly> parse_vector(const std::string& s, const VarTable& vars, const std::string& what) {
  std::vector<Poly> v;
  for (const std::string& part : split_top(unbracket(s, what), ','))
    v.push_back(parse_poly(part, vars));
  return v;
}

inline std::vector<std::vector<Poly>> parse_matrix(const std::string& s, const VarTable& vars,
                                                   const std::string& what) {
  std::vector<std::vector<Poly>> rows;
  for (const std::string& row : split_top(unbracket(s, what), ';'))
    rows.push_back(parse_vector(row, vars, what + " row"));
  require(!rows.empty(), ErrKind::Parse, what + " is empty");
  for (const auto& r : rows)
    require(r.size() == rows[0].size(), ErrKind::Parse, what + " has ragged rows");
  return rows;
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

/// "<keyword> rest" -> rest, or nullopt if the keyword does not match.
inline std::optional<std::string> keyword_rest(const std::string& line, const std::string& kw) {
  if (!starts_with(line, kw)) return std::nullopt;
  if (line.size() == kw.size()) return std::string();
  char next = line[kw.size()];
  if (next != ' ' && next != '\t' && next != '=') return std::nullopt;
  return trim(line.substr(kw.size()));
}

inline std::string expect_eq(const std::string& s, const std::string& what) {
  require(!s.empty() && s[0] == '=', ErrKind::Parse, what + ": expected '='");
  return trim(s.substr(1));
}

inline long parse_long(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    long v = std::stol(s, &used);
    require(used == s.size(), ErrKind::Parse, what + ": bad integer '" + s + "'");
    return v;
  } catch (const CmodError&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrKind::Parse, what + ": bad integer '" + s + "'");
  }
}

}  // namespace detail

/**
 * Parse the line-oriented presentation format.  Header lines (p=, lambda,
 * fiber, rel, flag, trunc) must precede the optional [lambda-structure] and
 * [module <name>] blocks.  Validates the algebra before returning.
 */
inline ParsedInput parse_input(const std::string& text) {
  using namespace detail;
  ParsedInput out;
  AugmentedAlgebra& a = out.algebra;

  enum class Section { Top, Lambda, Module };
  Section section = Section::Top;

  // raw lambda-structure block pieces
  std::vector<std::string> basis;
  std::vector<std::tuple<std::string, std::string, std::vector<Poly>>> mult_lines;
  std::optional<std::vector<mpq_class>> aug;
  std::vector<std::pair<std::string, std::vector<Poly>>> embed_lines;
  bool have_lambda_block = false;
  bool vars_closed = false;  // set once the first rel/block is seen

  auto label_index = [&](const std::string& label) -> long {
    for (size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == label) return static_cast<long>(i);
    fail(ErrKind::Parse, "unknown basis label '" + label + "'");
  };

  for (const std::string& line : logical_lines(text)) {
    if (starts_with(line, "[")) {
      require(line.back() == ']', ErrKind::Parse, "malformed block header '" + line + "'");
      std::string head = trim(line.substr(1, line.size() - 2));
      vars_closed = true;
      if (head == "lambda-structure") {
        require(!have_lambda_block, ErrKind::Parse, "duplicate [lambda-structure] block");
        have_lambda_block = true;
        section = Section::Lambda;
      } else if (starts_with(head, "module")) {
        std::string name = trim(head.substr(6));
        require(!name.empty(), ErrKind::Parse, "module block needs a name: [module M]");
        out.modules.push_back(RawModuleBlock{name, {}});
        section = Section::Module;
      } else {
        fail(ErrKind::Parse, "unknown block '" + line + "'");
      }
      continue;
    }

    if (section == Section::Top) {
      if (auto rest = keyword_rest(line, "p")) {
        a.p = parse_long(expect_eq(*rest, "p"), "p");
        continue;
      }
      if (auto rest = keyword_rest(line, "lambda")) {
        require(!vars_closed, ErrKind::Parse, "lambda line must precede relations");
        auto names = split_names(*rest);
        a.vars.names.insert(a.vars.names.begin() + a.vars.lambda_count, names.begin(), names.end());
        a.vars.lambda_count += static_cast<long>(names.size());
        continue;
      }
      if (auto rest = keyword_rest(line, "fiber")) {
        require(!vars_closed, ErrKind::Parse, "fiber line must precede relations");
        for (const auto& n : split_names(*rest)) a.vars.names.push_back(n);
        continue;
      }
      if (auto rest = keyword_rest(line, "rel")) {
        vars_closed = true;
        a.relations.push_back(parse_poly(*rest, a.vars));
        continue;
      }
      if (auto rest = keyword_rest(line, "flag")) {
        a.flags.push_back(trim(*rest));
        continue;
      }
      if (auto rest = keyword_rest(line, "trunc")) {
        out.trunc = parse_long(*rest, "trunc");
        require(out.trunc >= 2, ErrKind::Parse, "trunc must be at least 2");
        continue;
      }
      fail(ErrKind::Parse, "unrecognized line '" + line + "'");
    }

    if (section == Section::Lambda) {
      if (auto rest = keyword_rest(line, "basis")) {
        basis = split_names(*rest);
        require(!basis.empty(), ErrKind::Parse, "empty basis line");
        continue;
      }
      if (auto rest = keyword_rest(line, "mult")) {
        size_t eq = rest->find('=');
        require(eq != std::string::npos, ErrKind::Parse, "mult line needs '='");
        std::string lhs = trim(rest->substr(0, eq));
        auto parts = split_top(lhs, '*');
        require(parts.size() == 2, ErrKind::Parse, "mult left side must be <label>*<label>");
        mult_lines.emplace_back(parts[0], parts[1],
                                parse_vector(trim(rest->substr(eq + 1)), a.vars, "mult vector"));
        continue;
      }
      if (auto rest = keyword_rest(line, "aug")) {
        std::string body = expect_eq(*rest, "aug");
        std::vector<mpq_class> v;
        for (const std::string& part : split_top(unbracket(body, "aug vector"), ',')) {
          Poly q = parse_poly(part, a.vars);
          require(q.degree() == 0, ErrKind::Parse, "aug entries must be constants");
          v.push_back(q.constant_term());
        }
        aug = v;
        continue;
      }
      if (auto rest = keyword_rest(line, "embed")) {
        size_t eq = rest->find('=');
        require(eq != std::string::npos, ErrKind::Parse, "embed line needs '='");
        embed_lines.emplace_back(trim(rest->substr(0, eq)),
                                 parse_vector(trim(rest->substr(eq + 1)), a.vars, "embed vector"));
        continue;
      }
      fail(ErrKind::Parse, "unrecognized lambda-structure line '" + line + "'");
    }

    // Section::Module
    if (auto rest = keyword_rest(line, "act")) {
      size_t eq = rest->find('=');
      require(eq != std::string::npos, ErrKind::Parse, "act line needs '='");
      out.modules.back().act.emplace_back(trim(rest->substr(0, eq)),
                                          parse_matrix(trim(rest->substr(eq + 1)), a.vars, "action matrix"));
      continue;
    }
    fail(ErrKind::Parse, "unrecognized module line '" + line + "'");
  }

  require(a.p != 0, ErrKind::Parse, "missing 'p=<prime>' line");
  validate_algebra(a);

  if (have_lambda_block) {
    LambdaStructure L;
    L.p = a.p;
    L.trunc = out.trunc;
    L.vars = a.vars;
    require(!basis.empty(), ErrKind::Parse, "[lambda-structure] block needs a basis line");
    L.basis = basis;
    L.rank = static_cast<long>(basis.size());
    const long r = L.rank;
    L.mult.assign(static_cast<size_t>(r), std::vector<LVec>(static_cast<size_t>(r)));
    std::vector<std::vector<bool>> given(static_cast<size_t>(r), std::vector<bool>(static_cast<size_t>(r), false));
    for (long j = 0; j < r; ++j) {
      L.mult[0][static_cast<size_t>(j)] = lvec_unit(L, j);
      L.mult[static_cast<size_t>(j)][0] = lvec_unit(L, j);
      given[0][static_cast<size_t>(j)] = given[static_cast<size_t>(j)][0] = true;
    }
    for (const auto& [la, lb, vec] : mult_lines) {
      long i = label_index(la), j = label_index(lb);
      require(static_cast<long>(vec.size()) == r, ErrKind::Parse,
              "mult " + la + "*" + lb + " has " + std::to_string(vec.size()) + " coordinates, expected " +
                  std::to_string(r));
      L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] = vec;
      L.mult[static_cast<size_t>(j)][static_cast<size_t>(i)] = vec;
      given[static_cast<size_t>(i)][static_cast<size_t>(j)] = given[static_cast<size_t>(j)][static_cast<size_t>(i)] =
          true;
    }
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < r; ++j)
        require(given[static_cast<size_t>(i)][static_cast<size_t>(j)], ErrKind::Parse,
                "missing mult line for " + basis[static_cast<size_t>(i)] + "*" + basis[static_cast<size_t>(j)]);
    if (aug) {
      require(static_cast<long>(aug->size()) == r, ErrKind::Parse, "aug vector has the wrong length");
      L.aug = *aug;
    } else {
      L.aug.assign(static_cast<size_t>(r), 0);
      L.aug[0] = 1;
    }
    for (long x = 0; x < a.vars.fiber_count(); ++x) {
      const std::string& name = a.vars.names[static_cast<size_t>(a.vars.lambda_count + x)];
      const std::vector<Poly>* found = nullptr;
      for (const auto& [n, vec] : embed_lines)
        if (n == name) found = &vec;
      if (found) {
        require(static_cast<long>(found->size()) == r, ErrKind::Parse, "embed " + name + " has the wrong length");
        L.embed.push_back(*found);
      } else {
        // a fiber variable that is itself a basis label embeds as a unit vector
        long idx = -1;
        for (long i = 0; i < r; ++i)
          if (basis[static_cast<size_t>(i)] == name) idx = i;
        require(idx >= 0, ErrKind::Parse, "no embed line for fiber variable '" + name + "'");
        L.embed.push_back(lvec_unit(L, idx));
      }
    }
    out.lambda = std::move(L);
  }

  return out;
}

inline ParsedInput load_input(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrKind::Parse, "cannot open input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_input(ss.str());
}

/// Resolve a raw module block against a structure: order action matrices by basis.
inline LambdaModule resolve_module(const RawModuleBlock& raw, const LambdaStructure& L) {
  LambdaModule m;
  m.name = raw.name;
  require(!raw.act.empty(), ErrKind::Parse, "module '" + raw.name + "' has no action matrices");
  m.rank = static_cast<long>(raw.act.front().second.size());
  for (long i = 0; i < L.rank; ++i) {
    const std::string& label = L.basis[static_cast<size_t>(i)];
    const std::vector<std::vector<Poly>>* found = nullptr;
    for (const auto& [n, mat] : raw.act)
      if (n == label) found = &mat;
    if (!found && i == 0) {
      // the identity may be omitted
      std::vector<std::vector<Poly>> id(static_cast<size_t>(m.rank),
                                        std::vector<Poly>(static_cast<size_t>(m.rank), Poly(L.vars.total())));
      for (long d = 0; d < m.rank; ++d) id[static_cast<size_t>(d)][static_cast<size_t>(d)] = Poly::one(L.vars.total());
      m.act.push_back(id);
      continue;
    }
    require(found != nullptr, ErrKind::Parse, "module '" + raw.name + "' is missing act " + label);
    require(static_cast<long>(found->size()) == m.rank &&
                static_cast<long>(found->front().size()) == m.rank,
            ErrKind::Parse, "module '" + raw.name + "' action matrices must be square of equal size");
    m.act.push_back(*found);
  }
  return m;
}

}  // namespace cmodlab
