#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synthdag/core/error.hpp"

namespace synthdag::chem {

// First whitespace-delimited token of every non-blank, non-comment line.
inline std::vector<std::string> read_smi_stream(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok) || tok[0] == '#') continue;
    out.push_back(tok);
  }
  return out;
}

inline std::vector<std::string> read_smi(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_smi_stream(in);
}

}  // namespace synthdag::chem
