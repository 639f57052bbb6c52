#pragma once
// Dense per-user document embeddings: pretrained unigram vectors averaged
// over the cleaned, concatenated tweet text of each user.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polarlens/common.hpp"

namespace polarlens {

struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::map<std::string, std::vector<float>> vectors;  // lowercase token -> vector

  const std::vector<float>* lookup(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// Text format: header `<count> <dim>`, then `token v1 ... v_dim` per line.
// Wrong arity is a hard error naming the line; a duplicated token keeps the
// last row and records a warning.
EmbeddingTable load_vectors(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_vectors(const EmbeddingTable& table, const std::string& path);

// Standard English stopwords plus twitter residue ("rt", "amp").
std::set<std::string> default_stopwords();
std::set<std::string> load_stopwords(const std::string& path);

// Lowercase, NFC-compose, strip URLs / @mentions / #hashtags / punctuation,
// drop stopwords, whitespace-tokenize.
std::vector<std::string> preprocess_text(std::string_view doc_text,
                                         const std::set<std::string>& stopwords);

struct DocEmbedding {
  std::string user_id;
  std::vector<double> vector;
  std::uint32_t n_tokens_matched = 0;
};

// Arithmetic mean of the matched token vectors (multiplicity counts);
// nullopt when nothing matches.
std::optional<DocEmbedding> embed_document(const std::vector<std::string>& tokens,
                                           const EmbeddingTable& table,
                                           const std::string& user_id = "");

// Dense embedding CSV: user_id,v0..v{dim-1}
void write_embedding_csv(const std::vector<DocEmbedding>& rows, std::uint32_t dim,
                         const std::string& path);

}  // namespace polarlens
