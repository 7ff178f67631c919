#pragma once

// Phrase canonicalization and pluggable similarity providers used as
// matching edge weights. The default provider is character-bigram Dice over
// the canonical phrase (interior spaces included); the embedding provider
// reads a unit-norm vector table and maps cosine into [0,1], falling back to
// the lexical score for phrases missing from the table.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "structreward/errors.hpp"
#include "structreward/parser.hpp"

namespace structreward {

// Lowercase, strip determiners, lemmatize every token, collapse whitespace.
// Idempotent on its own outputs.
inline std::string canonicalize(const std::string& phrase, const Lexicon& lex) {
  std::string lowered;
  lowered.reserve(phrase.size());
  for (char c : phrase) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  std::istringstream in(lowered);
  std::string token;
  std::string out;
  while (in >> token) {
    if (token == "a" || token == "an" || token == "the" || token == "another") continue;
    if (!out.empty()) out.push_back(' ');
    out += lemmatize(token, lex);
  }
  return out;
}

namespace detail {

inline std::vector<std::string> bigrams(const std::string& s) {
  std::vector<std::string> out;
  for (size_t i = 0; i + 1 < s.size(); ++i) out.push_back(s.substr(i, 2));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Dice coefficient over character-bigram multisets. Equal strings score 1
// (including empty vs empty); bigram-free mismatches score 0.
inline double lexical_score(const std::string& a, const std::string& b) {
  if (a == b) return 1.0;
  const auto ba = detail::bigrams(a);
  const auto bb = detail::bigrams(b);
  if (ba.empty() && bb.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(ba.begin(), ba.end(), bb.begin(), bb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) /
         static_cast<double>(ba.size() + bb.size());
}

class EmbeddingTable {
public:
  EmbeddingTable() = default;

  // File format: header `dim=<d>`, then one record per line
  // `phrase<TAB>v1 v2 ... vd`. Vectors are normalized on load.
  static EmbeddingTable parse(const std::string& text) {
    EmbeddingTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim=", 0) != 0)
      throw SchemaError("embedding table must start with a 'dim=<d>' header");
    table.dim_ = std::stoi(line.substr(4));
    if (table.dim_ <= 0) throw TableDimensionMismatch("embedding dimension must be positive");

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw SchemaError("embedding record needs a tab between phrase and values");
      const std::string phrase = line.substr(0, tab);
      std::istringstream values(line.substr(tab + 1));
      std::vector<double> v;
      double x = 0.0;
      while (values >> x) v.push_back(x);
      if (static_cast<int>(v.size()) != table.dim_)
        throw TableDimensionMismatch("phrase '" + phrase + "' has " +
                                     std::to_string(v.size()) + " values, expected " +
                                     std::to_string(table.dim_));
      double norm = 0.0;
      for (double d : v) norm += d * d;
      norm = std::sqrt(norm);
      if (norm <= 0.0) throw SchemaError("phrase '" + phrase + "' has a zero vector");
      for (double& d : v) d /= norm;
      table.vectors_[phrase] = std::move(v);
    }
    return table;
  }

  int dim() const { return dim_; }

  const std::vector<double>* find(const std::string& phrase) const {
    auto it = vectors_.find(phrase);
    return it == vectors_.end() ? nullptr : &it->second;
  }

private:
  int dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

// Read-only after construction; safe for concurrent scoring.
class SimilarityProvider {
public:
  static SimilarityProvider lexical() { return SimilarityProvider{}; }

  static SimilarityProvider embedding(EmbeddingTable table) {
    SimilarityProvider p;
    p.kind_ = Kind::EmbeddingTable;
    p.table_ = std::move(table);
    return p;
  }

  std::string kind() const { return kind_ == Kind::Lexical ? "lexical" : "embedding_table"; }

  // a and b are canonical phrases. Symmetric, reflexive, in [0,1].
  double score(const std::string& a, const std::string& b) const {
    if (a == b) return 1.0;
    if (kind_ == Kind::EmbeddingTable) {
      const auto* va = table_.find(a);
      const auto* vb = table_.find(b);
      if (va && vb) {
        double cosine = 0.0;
        for (size_t i = 0; i < va->size(); ++i) cosine += (*va)[i] * (*vb)[i];
        return std::clamp((1.0 + cosine) / 2.0, 0.0, 1.0);
      }
      // out-of-table phrases fall back to the lexical score
    }
    return lexical_score(a, b);
  }

private:
  enum class Kind { Lexical, EmbeddingTable };
  Kind kind_ = Kind::Lexical;
  EmbeddingTable table_;
};

}  // namespace structreward
