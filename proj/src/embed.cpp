#include "polarlens/embed.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "polarlens/corpus.hpp"
#include "polarlens/io_util.hpp"

namespace polarlens {

EmbeddingTable load_vectors(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vectors '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("vector file '" + path + "' is empty");
  std::istringstream header(line);
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
  if (!(header >> count >> dim) || dim == 0)
    throw ValidationError("vector file '" + path + "': header must be `<count> <dim>`");

  EmbeddingTable table;
  table.dim = dim;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    std::vector<float> vec;
    vec.reserve(dim);
    double v;
    while (row >> v) {
      if (!std::isfinite(v))
        throw ValidationError(path + ":" + std::to_string(lineno) + ": non-finite vector entry");
      vec.push_back(static_cast<float>(v));
    }
    if (token.empty() || vec.size() != dim)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected token + " +
                            std::to_string(dim) + " floats");
    token = unicode_lowercase(token);
    auto it = table.vectors.find(token);
    if (it != table.vectors.end()) {
      if (warnings) warnings->push_back("duplicate vector for token '" + token + "'");
      it->second = std::move(vec);  // last row wins
    } else {
      table.vectors.emplace(std::move(token), std::move(vec));
    }
  }
  if (table.vectors.size() != count && warnings)
    warnings->push_back("vector header count " + std::to_string(count) + " but " +
                        std::to_string(table.vectors.size()) + " tokens loaded");
  return table;
}

void save_vectors(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << table.vectors.size() << ' ' << table.dim << '\n';
  for (const auto& [token, vec] : table.vectors) {
    out << token;
    for (float v : vec) out << ' ' << format_double(v);
    out << '\n';
  }
}

std::set<std::string> default_stopwords() {
  static const char* kWords[] = {
      "a",     "about", "above", "after",  "again",   "all",   "am",    "an",    "and",   "any",
      "are",   "as",    "at",    "be",     "because", "been",  "before", "being", "below", "between",
      "both",  "but",   "by",    "can",    "could",   "did",   "do",    "does",  "doing", "down",
      "during", "each",  "few",   "for",    "from",    "further", "had",  "has",   "have",  "having",
      "he",    "her",   "here",  "hers",   "him",     "his",   "how",   "i",     "if",    "in",
      "into",  "is",    "it",    "its",    "just",    "me",    "more",  "most",  "my",    "no",
      "nor",   "not",   "now",   "of",     "off",     "on",    "once",  "only",  "or",    "other",
      "our",   "ours",  "out",   "over",   "own",     "same",  "she",   "so",    "some",  "such",
      "than",  "that",  "the",   "their",  "theirs",  "them",  "then",  "there", "these", "they",
      "this",  "those", "through", "to",   "too",     "under", "until", "up",    "very",  "was",
      "we",    "were",  "what",  "when",   "where",   "which", "while", "who",   "whom",  "why",
      "will",  "with",  "you",   "your",   "yours",   "rt",    "amp",
  };
  std::set<std::string> out;
  for (const char* w : kWords) out.insert(w);
  return out;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stopwords '" + path + "'");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(unicode_lowercase(line));
  }
  return words;
}

namespace {

bool ascii_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> preprocess_text(std::string_view doc_text,
                                         const std::set<std::string>& stopwords) {
  std::string text = unicode_lowercase(nfc_compose(doc_text));
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    // URLs, mentions and hashtags are removed whole
    if (text.compare(i, 7, "http://") == 0 || text.compare(i, 8, "https://") == 0 ||
        c == '@' || c == '#') {
      while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    if (ascii_punct(c)) {
      ++i;
      continue;
    }
    std::string token;
    while (i < n) {
      unsigned char cc = static_cast<unsigned char>(text[i]);
      if (std::isspace(cc) || ascii_punct(cc)) break;
      token.push_back(static_cast<char>(cc));
      ++i;
    }
    if (!token.empty() && !stopwords.count(token)) tokens.push_back(std::move(token));
  }
  return tokens;
}

std::optional<DocEmbedding> embed_document(const std::vector<std::string>& tokens,
                                           const EmbeddingTable& table,
                                           const std::string& user_id) {
  DocEmbedding doc;
  doc.user_id = user_id;
  doc.vector.assign(table.dim, 0.0);
  for (const auto& token : tokens) {
    if (const auto* vec = table.lookup(token)) {
      for (std::uint32_t i = 0; i < table.dim; ++i) doc.vector[i] += (*vec)[i];
      ++doc.n_tokens_matched;
    }
  }
  if (doc.n_tokens_matched == 0) return std::nullopt;
  for (double& v : doc.vector) v /= doc.n_tokens_matched;
  return doc;
}

void write_embedding_csv(const std::vector<DocEmbedding>& rows, std::uint32_t dim,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "user_id";
  for (std::uint32_t i = 0; i < dim; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& row : rows) {
    out << row.user_id;
    for (double v : row.vector) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace polarlens
