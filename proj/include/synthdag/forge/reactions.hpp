#pragma once

#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synthdag/chem/molecule.hpp"

namespace synthdag::forge {

struct RecordMol {
  chem::MolGraph graph;  // as written, atom maps kept
  chem::MolPtr mol;      // canonical, maps stripped
};

struct ReactionRecord {
  std::vector<RecordMol> reactants;
  std::vector<RecordMol> reagents;
  std::vector<RecordMol> products;
  std::size_t line = 0;

  bool multi_product() const { return products.size() > 1; }
};

struct Reject {
  std::size_t line = 0;
  std::string text;
  std::string reason;
};

struct ParsedReactions {
  std::vector<ReactionRecord> records;
  std::vector<Reject> rejects;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<RecordMol> parse_field(const std::string& field) {
  std::vector<RecordMol> out;
  if (field.empty()) return out;
  for (const auto& part : split(field, '.')) {
    if (part.empty()) throw chem::MolError("empty molecule in '" + field + "'");
    chem::MolGraph g = chem::parse_smiles(part);
    chem::MolPtr m = chem::make_molecule(g);
    out.push_back({std::move(g), std::move(m)});
  }
  return out;
}

}  // namespace detail

// Lines "reactants>reagents>products"; anything after the first whitespace
// is ignored, as are blank lines and lines starting with '#'.
inline ParsedReactions parse_reactions_stream(std::istream& in) {
  ParsedReactions out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok) || tok[0] == '#') continue;
    const auto fields = detail::split(tok, '>');
    if (fields.size() != 3) {
      out.rejects.push_back({no, tok, "expected reactants>reagents>products"});
      continue;
    }
    try {
      ReactionRecord r;
      r.line = no;
      r.reactants = detail::parse_field(fields[0]);
      r.reagents = detail::parse_field(fields[1]);
      r.products = detail::parse_field(fields[2]);
      if (r.reactants.empty()) throw chem::MolError("no reactants");
      if (r.products.empty()) throw chem::MolError("no products");
      out.records.push_back(std::move(r));
    } catch (const Error& e) {
      out.rejects.push_back({no, tok, e.what()});
    }
  }
  return out;
}

inline ParsedReactions parse_reactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read reactions file " + path);
  return parse_reactions_stream(in);
}

inline void write_rejects(const std::string& path, const std::vector<Reject>& rejects) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "line\treason\ttext\n";
  for (const auto& r : rejects) out << r.line << '\t' << r.reason << '\t' << r.text << '\n';
}

inline std::set<int> map_numbers(const chem::MolGraph& g) {
  std::set<int> s;
  for (const auto& a : g.atoms()) {
    if (a.map_number > 0) s.insert(a.map_number);
  }
  return s;
}

// Drops multi-product records. With atom maps, reactants contributing no
// mapped atom to the product become reagents; records left without
// reactants are dropped. Unmapped records pass through.
inline std::vector<ReactionRecord> filter_reactions(std::vector<ReactionRecord> records) {
  std::vector<ReactionRecord> out;
  for (auto& r : records) {
    if (r.products.size() != 1) continue;
    const std::set<int> product_maps = map_numbers(r.products[0].graph);
    bool mapped = !product_maps.empty();
    if (mapped) {
      std::vector<RecordMol> keep;
      for (auto& m : r.reactants) {
        bool contributes = false;
        for (int k : map_numbers(m.graph)) contributes = contributes || product_maps.count(k) > 0;
        (contributes ? keep : r.reagents).push_back(std::move(m));
      }
      r.reactants = std::move(keep);
      if (r.reactants.empty()) continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace synthdag::forge
