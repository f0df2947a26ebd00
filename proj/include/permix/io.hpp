#ifndef PERMIX_IO_HPP
#define PERMIX_IO_HPP

// Sample-set text format: a comment header recording provenance, then one
// permutation per line in rank-order display notation.

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "permix/mallows.hpp"
#include "permix/permutation.hpp"

namespace permix {

inline void write_samples(std::ostream& out, const SampleSet& samples) {
  if (samples.draws.empty()) throw std::invalid_argument("empty sample set");
  out << "# n=" << samples.n() << " phi=" << std::setprecision(17)
      << samples.phi << " seed=" << samples.seed
      << " generator=" << samples.generator << "\n";
  for (const auto& p : samples.draws) out << p.to_string() << "\n";
}

inline void write_samples_file(const std::string& path,
                               const SampleSet& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_samples(out, samples);
}

inline SampleSet read_samples(std::istream& in) {
  SampleSet s;
  std::string line;
  int n = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string token;
      while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "phi") s.phi = std::stod(value);
        if (key == "seed") s.seed = std::stoull(value);
        if (key == "generator") s.generator = value;
      }
      continue;
    }
    Permutation p = Permutation::parse(line);
    if (n < 0) n = p.size();
    if (p.size() != n)
      throw std::invalid_argument("sample file mixes permutation sizes");
    s.draws.push_back(std::move(p));
  }
  if (s.draws.empty())
    throw std::invalid_argument("sample file holds no permutations");
  return s;
}

inline SampleSet read_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_samples(in);
}

}  // namespace permix

#endif  // PERMIX_IO_HPP
