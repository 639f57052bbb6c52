#include "polarlens/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

// --- UTF-8 helpers -----------------------------------------------------------

namespace {

// Decodes one code point at byte offset i; advances i. Invalid bytes decode
// as themselves so malformed input passes through instead of aborting.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    cp = c & 0x1F;
    extra = 1;
  } else if ((c & 0xF0) == 0xE0) {
    cp = c & 0x0F;
    extra = 2;
  } else if ((c & 0xF8) == 0xF0) {
    cp = c & 0x07;
    extra = 3;
  } else {
    ++i;
    return c;
  }
  if (i + extra >= s.size()) {
    ++i;
    return c;
  }
  for (int k = 1; k <= extra; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t lower_cp(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  // Latin-1 uppercase letters, skipping the multiplication sign
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

struct Composition {
  char base;
  char32_t mark;
  char32_t composed;
};

// Precomposition subset: ASCII letters + the combining marks that map into
// Latin-1 Supplement / Latin Extended-A. Enough for Western-European text;
// anything outside the table is left decomposed.
constexpr Composition kCompositions[] = {
    {'a', 0x300, 0xE0},  {'a', 0x301, 0xE1},  {'a', 0x302, 0xE2},  {'a', 0x303, 0xE3},
    {'a', 0x308, 0xE4},  {'a', 0x30A, 0xE5},  {'a', 0x304, 0x101}, {'a', 0x306, 0x103},
    {'e', 0x300, 0xE8},  {'e', 0x301, 0xE9},  {'e', 0x302, 0xEA},  {'e', 0x308, 0xEB},
    {'e', 0x304, 0x113}, {'e', 0x30C, 0x11B}, {'i', 0x300, 0xEC},  {'i', 0x301, 0xED},
    {'i', 0x302, 0xEE},  {'i', 0x308, 0xEF},  {'i', 0x303, 0x129}, {'o', 0x300, 0xF2},
    {'o', 0x301, 0xF3},  {'o', 0x302, 0xF4},  {'o', 0x303, 0xF5},  {'o', 0x308, 0xF6},
    {'u', 0x300, 0xF9},  {'u', 0x301, 0xFA},  {'u', 0x302, 0xFB},  {'u', 0x308, 0xFC},
    {'u', 0x30A, 0x16F}, {'n', 0x303, 0xF1},  {'n', 0x301, 0x144}, {'c', 0x327, 0xE7},
    {'c', 0x301, 0x107}, {'c', 0x30C, 0x10D}, {'s', 0x301, 0x15B}, {'s', 0x30C, 0x161},
    {'z', 0x301, 0x17A}, {'z', 0x307, 0x17C}, {'z', 0x30C, 0x17E}, {'y', 0x301, 0xFD},
    {'y', 0x308, 0xFF},  {'g', 0x306, 0x11F}, {'r', 0x30C, 0x159},
    {'A', 0x300, 0xC0},  {'A', 0x301, 0xC1},  {'A', 0x302, 0xC2},  {'A', 0x303, 0xC3},
    {'A', 0x308, 0xC4},  {'A', 0x30A, 0xC5},  {'E', 0x300, 0xC8},  {'E', 0x301, 0xC9},
    {'E', 0x302, 0xCA},  {'E', 0x308, 0xCB},  {'I', 0x300, 0xCC},  {'I', 0x301, 0xCD},
    {'I', 0x302, 0xCE},  {'I', 0x308, 0xCF},  {'O', 0x300, 0xD2},  {'O', 0x301, 0xD3},
    {'O', 0x302, 0xD4},  {'O', 0x303, 0xD5},  {'O', 0x308, 0xD6},  {'U', 0x300, 0xD9},
    {'U', 0x301, 0xDA},  {'U', 0x302, 0xDB},  {'U', 0x308, 0xDC},  {'N', 0x303, 0xD1},
    {'C', 0x327, 0xC7},  {'Y', 0x301, 0xDD},
};

std::optional<char32_t> compose(char32_t base, char32_t mark) {
  if (base > 0x7F) return std::nullopt;
  for (const auto& e : kCompositions)
    if (static_cast<char32_t>(e.base) == base && e.mark == mark) return e.composed;
  return std::nullopt;
}

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;  // non-ASCII counts as letter
}

}  // namespace

std::string unicode_lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) encode_utf8(lower_cp(decode_utf8(s, i)), out);
  return out;
}

std::string nfc_compose(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  char32_t pending = 0;
  bool has_pending = false;
  auto flush = [&]() {
    if (has_pending) encode_utf8(pending, out);
    has_pending = false;
  };
  while (i < s.size()) {
    char32_t cp = decode_utf8(s, i);
    if (cp >= 0x300 && cp <= 0x36F && has_pending) {
      if (auto c = compose(pending, cp)) {
        pending = *c;
        continue;
      }
    }
    flush();
    pending = cp;
    has_pending = true;
  }
  flush();
  return out;
}

std::string normalize_hashtag(std::string_view raw) {
  std::string_view s = raw;
  if (!s.empty() && s[0] == '#') s.remove_prefix(1);
  std::string lowered = unicode_lowercase(nfc_compose(s));
  std::string out;
  out.reserve(lowered.size());
  for (unsigned char c : lowered)
    if (is_word_byte(c)) out.push_back(static_cast<char>(c));
  return out;
}

std::vector<std::string> extract_hashtags(std::string_view text) {
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '#') continue;
    if (i > 0 && is_word_byte(static_cast<unsigned char>(text[i - 1]))) continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i + 1) {
      std::string tag = normalize_hashtag(text.substr(i, j - i));
      if (!tag.empty()) tags.push_back(std::move(tag));
    }
    i = j - 1;
  }
  return tags;
}

std::vector<std::string> extract_urls(std::string_view text) {
  std::vector<std::string> urls;
  for (std::size_t i = 0; i + 7 <= text.size(); ++i) {
    if (text.compare(i, 7, "http://") != 0 && text.compare(i, 8, "https://") != 0) continue;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view url = text.substr(i, j - i);
    while (!url.empty() && std::string_view(".,;:!?)\"'").find(url.back()) != std::string_view::npos)
      url.remove_suffix(1);
    if (url.size() > (text.compare(i, 8, "https://") == 0 ? 8u : 7u)) urls.emplace_back(url);
    i = j;
  }
  return urls;
}

namespace {

// Two-label public suffixes this pipeline recognizes; unknown suffixes fall
// back to the last two hostname labels.
const std::set<std::string>& multipart_suffixes() {
  static const std::set<std::string> s = {
      "co.uk",  "org.uk", "ac.uk",  "gov.uk", "me.uk",  "net.uk", "co.jp",  "or.jp",
      "ne.jp",  "ac.jp",  "go.jp",  "com.au", "net.au", "org.au", "edu.au", "gov.au",
      "co.nz",  "org.nz", "net.nz", "co.in",  "net.in", "org.in", "com.br", "org.br",
      "gov.br", "com.mx", "com.ar", "com.cn", "net.cn", "org.cn", "com.tr", "co.za",
      "org.za", "com.sg", "com.hk", "co.kr",  "or.kr",  "com.tw",
  };
  return s;
}

}  // namespace

std::optional<std::string> extract_domain(std::string_view url) {
  std::string_view s = url;
  auto scheme = s.find("://");
  if (scheme != std::string_view::npos) s.remove_prefix(scheme + 3);
  auto end = s.find_first_of("/?#");
  std::string_view host_view = s.substr(0, end);
  auto at = host_view.rfind('@');
  if (at != std::string_view::npos) host_view.remove_prefix(at + 1);
  auto colon = host_view.find(':');
  if (colon != std::string_view::npos) host_view = host_view.substr(0, colon);
  if (host_view.empty()) return std::nullopt;

  std::string host;
  host.reserve(host_view.size());
  for (char c : host_view) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isupper(u)) c = static_cast<char>(std::tolower(u));
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(u) || c == '.' || c == '-'))
      return std::nullopt;
    host.push_back(c);
  }
  if (host.front() == '.' || host.back() == '.' || host.find("..") != std::string::npos)
    return std::nullopt;

  std::vector<std::string> labels = split_on(host, '.');
  if (labels.size() >= 3 && labels.front() == "www") labels.erase(labels.begin());
  if (labels.size() < 2) return std::nullopt;
  // numeric last label means an IP address, not a hostname
  if (labels.back().find_first_not_of("0123456789") == std::string::npos) return std::nullopt;

  std::size_t n = labels.size();
  std::string last_two = labels[n - 2] + "." + labels[n - 1];
  if (multipart_suffixes().count(last_two)) {
    if (n < 3) return std::nullopt;  // the host IS the suffix
    return labels[n - 3] + "." + last_two;
  }
  return last_two;
}

// --- gazetteer ----------------------------------------------------------------

namespace {

struct StateEntry {
  const char* name;
  const char* code;
};

constexpr StateEntry kStates[] = {
    {"alabama", "AL"},        {"alaska", "AK"},        {"arizona", "AZ"},
    {"arkansas", "AR"},       {"california", "CA"},    {"colorado", "CO"},
    {"connecticut", "CT"},    {"delaware", "DE"},      {"florida", "FL"},
    {"georgia", "GA"},        {"hawaii", "HI"},        {"idaho", "ID"},
    {"illinois", "IL"},       {"indiana", "IN"},       {"iowa", "IA"},
    {"kansas", "KS"},         {"kentucky", "KY"},      {"louisiana", "LA"},
    {"maine", "ME"},          {"maryland", "MD"},      {"massachusetts", "MA"},
    {"michigan", "MI"},       {"minnesota", "MN"},     {"mississippi", "MS"},
    {"missouri", "MO"},       {"montana", "MT"},       {"nebraska", "NE"},
    {"nevada", "NV"},         {"new hampshire", "NH"}, {"new jersey", "NJ"},
    {"new mexico", "NM"},     {"new york", "NY"},      {"north carolina", "NC"},
    {"north dakota", "ND"},   {"ohio", "OH"},          {"oklahoma", "OK"},
    {"oregon", "OR"},         {"pennsylvania", "PA"},  {"rhode island", "RI"},
    {"south carolina", "SC"}, {"south dakota", "SD"},  {"tennessee", "TN"},
    {"texas", "TX"},          {"utah", "UT"},          {"vermont", "VT"},
    {"virginia", "VA"},       {"washington", "WA"},    {"west virginia", "WV"},
    {"wisconsin", "WI"},      {"wyoming", "WY"},       {"district of columbia", "DC"},
};

bool found_with_word_boundaries(const std::string& hay, const std::string& needle) {
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_byte(static_cast<unsigned char>(hay[pos - 1]));
    std::size_t after = pos + needle.size();
    bool right_ok = after >= hay.size() || !is_word_byte(static_cast<unsigned char>(hay[after]));
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

}  // namespace

Gazetteer::Gazetteer() {
  for (const auto& e : kStates) {
    names_.emplace_back(e.name, e.code);
    std::string code_lc = e.code;
    for (char& c : code_lc) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    names_.emplace_back(code_lc, e.code);
  }
}

const Gazetteer& Gazetteer::builtin() {
  static const Gazetteer g;
  return g;
}

std::optional<std::string> Gazetteer::match(std::string_view profile_location) const {
  if (profile_location.empty()) return std::nullopt;
  std::string hay = unicode_lowercase(profile_location);
  std::set<std::string> matched;
  for (const auto& [needle, code] : names_)
    if (found_with_word_boundaries(hay, needle)) matched.insert(code);
  if (matched.size() == 1) return *matched.begin();
  return std::nullopt;  // zero or ambiguous
}

// --- parsing ------------------------------------------------------------------

SchemaConfig SchemaConfig::from_json_file(const std::string& path) {
  json j = json::parse(read_text_file(path));
  SchemaConfig s;
  auto grab = [&](const char* key, std::string& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
  };
  grab("id_key", s.id_key);
  grab("user_key", s.user_key);
  grab("time_key", s.time_key);
  grab("text_key", s.text_key);
  grab("urls_key", s.urls_key);
  grab("hashtags_key", s.hashtags_key);
  grab("retweet_key", s.retweet_key);
  grab("location_key", s.location_key);
  return s;
}

namespace {

// ids may arrive as strings or bare integers depending on the export tool
std::optional<std::string> id_like(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) {
    std::string s = it->get<std::string>();
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
  return std::nullopt;
}

std::optional<std::string> rt_prefix_target(std::string_view text) {
  if (text.size() < 5 || text.compare(0, 4, "RT @") != 0) return std::nullopt;
  std::size_t j = 4;
  while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
  if (j == 4) return std::nullopt;
  return std::string(text.substr(4, j - 4));
}

}  // namespace

std::optional<TweetRecord> parse_tweet_line(std::string_view line, const SchemaConfig& schema,
                                            const WindowSpec& window, IngestCounters& counters) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    ++counters.skipped_malformed;
    return std::nullopt;
  }
  TweetRecord rec;
  auto id = id_like(j, schema.id_key);
  auto user = id_like(j, schema.user_key);
  auto time_it = j.find(schema.time_key);
  auto text_it = j.find(schema.text_key);
  if (!id || !user || time_it == j.end() || !time_it->is_string() || text_it == j.end() ||
      !text_it->is_string()) {
    ++counters.skipped_malformed;
    return std::nullopt;
  }
  auto ts = parse_rfc3339(time_it->get_ref<const std::string&>());
  if (!ts) {
    ++counters.skipped_malformed;
    return std::nullopt;
  }
  if (!window.contains(*ts)) {
    ++counters.skipped_window;
    return std::nullopt;
  }
  rec.tweet_id = std::move(*id);
  rec.user_id = std::move(*user);
  rec.timestamp = *ts;
  rec.text = text_it->get<std::string>();

  if (auto it = j.find(schema.hashtags_key); it != j.end() && it->is_array()) {
    for (const auto& h : *it) {
      if (!h.is_string()) continue;
      std::string tag = normalize_hashtag(h.get_ref<const std::string&>());
      if (!tag.empty()) rec.hashtags.push_back(std::move(tag));
    }
  } else {
    rec.hashtags = extract_hashtags(rec.text);
  }

  if (auto it = j.find(schema.urls_key); it != j.end() && it->is_array()) {
    for (const auto& u : *it)
      if (u.is_string()) rec.urls.push_back(u.get<std::string>());
  } else {
    rec.urls = extract_urls(rec.text);
  }

  if (auto rt = id_like(j, schema.retweet_key)) {
    rec.retweeted_user_id = std::move(*rt);
  } else if (auto rt2 = rt_prefix_target(rec.text)) {
    rec.retweeted_user_id = std::move(*rt2);
  }

  if (auto it = j.find(schema.location_key); it != j.end() && it->is_string())
    rec.state = Gazetteer::builtin().match(it->get_ref<const std::string&>());

  ++counters.parsed;
  return rec;
}

// --- aggregation ----------------------------------------------------------------

UserStoreBuilder::UserStoreBuilder(WindowSpec window, BiweeklySpec buckets)
    : window_(window), buckets_(std::move(buckets)) {}

void UserStoreBuilder::add(const TweetRecord& rec) {
  Pending& p = users_[rec.user_id];
  int bucket = buckets_.bucket_of(rec.timestamp);
  p.texts.push_back({rec.timestamp, rec.tweet_id, rec.text});
  if (rec.state) ++p.state_votes[*rec.state];
  for (const auto& tag : rec.hashtags) ++p.hashtag_counts[tag];
  std::vector<std::string> distinct(rec.hashtags.begin(), rec.hashtags.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() >= 2) p.tag_sets.push_back({rec.timestamp, rec.tweet_id, std::move(distinct)});
  for (const auto& url : rec.urls) {
    if (auto dom = extract_domain(url)) {
      ++p.shared_domains[*dom];
      if (bucket > 0) ++p.per_bucket_domains[bucket][*dom];
    }
  }
  if (bucket > 0) ++p.per_bucket_tweets[bucket];
}

void UserStoreBuilder::merge(UserStoreBuilder&& other) {
  counters.add(other.counters);
  for (auto& [uid, op] : other.users_) {
    auto [it, inserted] = users_.try_emplace(uid, std::move(op));
    if (inserted) continue;
    Pending& p = it->second;
    Pending& o = op;
    for (auto& [s, c] : o.state_votes) p.state_votes[s] += c;
    p.texts.insert(p.texts.end(), std::make_move_iterator(o.texts.begin()),
                   std::make_move_iterator(o.texts.end()));
    p.tag_sets.insert(p.tag_sets.end(), std::make_move_iterator(o.tag_sets.begin()),
                      std::make_move_iterator(o.tag_sets.end()));
    for (auto& [t, c] : o.hashtag_counts) p.hashtag_counts[t] += c;
    for (auto& [d, c] : o.shared_domains) p.shared_domains[d] += c;
    for (auto& [b, m] : o.per_bucket_domains)
      for (auto& [d, c] : m) p.per_bucket_domains[b][d] += c;
    for (auto& [b, c] : o.per_bucket_tweets) p.per_bucket_tweets[b] += c;
  }
  other.users_.clear();
}

UserStore UserStoreBuilder::finalize() && {
  UserStore store;
  store.window = window_;
  store.buckets = buckets_;
  store.counters = counters;

  std::set<std::string> tag_set, domain_set;
  for (const auto& [uid, p] : users_) {
    for (const auto& [t, c] : p.hashtag_counts) tag_set.insert(t);
    for (const auto& [d, c] : p.shared_domains) domain_set.insert(d);
  }
  store.tags.assign(tag_set.begin(), tag_set.end());
  store.domains.assign(domain_set.begin(), domain_set.end());

  std::map<std::string, std::uint32_t> tag_idx, dom_idx;
  for (std::uint32_t i = 0; i < store.tags.size(); ++i) tag_idx[store.tags[i]] = i;
  for (std::uint32_t i = 0; i < store.domains.size(); ++i) dom_idx[store.domains[i]] = i;

  store.users.reserve(users_.size());
  for (auto& [uid, p] : users_) {
    UserAggregate agg;
    agg.user_id = uid;

    if (!p.state_votes.empty()) {
      // most frequent state, ties to the lexicographically smaller code
      std::uint32_t best = 0;
      for (const auto& [s, c] : p.state_votes)
        if (c > best) best = c, agg.state = s;
    }

    auto by_time = [](const auto& a, const auto& b) {
      return std::tie(a.ts, a.tweet_id) < std::tie(b.ts, b.tweet_id);
    };
    std::sort(p.texts.begin(), p.texts.end(), by_time);
    std::size_t total = 0;
    for (const auto& t : p.texts) total += t.text.size() + 1;
    agg.doc_text.reserve(total);
    for (const auto& t : p.texts) {
      if (!agg.doc_text.empty()) agg.doc_text.push_back('\n');
      agg.doc_text += t.text;
    }

    for (const auto& [t, c] : p.hashtag_counts) agg.hashtag_counts[tag_idx.at(t)] = c;
    for (const auto& [d, c] : p.shared_domains) agg.shared_domains[dom_idx.at(d)] = c;
    for (const auto& [b, m] : p.per_bucket_domains)
      for (const auto& [d, c] : m) agg.per_bucket_domains[b][dom_idx.at(d)] = c;
    agg.per_bucket_tweets = p.per_bucket_tweets;

    std::sort(p.tag_sets.begin(), p.tag_sets.end(), by_time);
    for (const auto& ts : p.tag_sets) {
      std::vector<std::uint32_t> ids;
      ids.reserve(ts.tags.size());
      for (const auto& t : ts.tags) ids.push_back(tag_idx.at(t));
      std::sort(ids.begin(), ids.end());
      agg.tweet_tag_sets.push_back(std::move(ids));
    }

    store.users.push_back(std::move(agg));
  }
  return store;
}

const UserAggregate* UserStore::find(std::string_view user_id) const {
  auto it = std::lower_bound(users.begin(), users.end(), user_id,
                             [](const UserAggregate& a, std::string_view id) { return a.user_id < id; });
  if (it != users.end() && it->user_id == user_id) return &*it;
  return nullptr;
}

std::optional<std::uint32_t> UserStore::tag_id(std::string_view tag) const {
  auto it = std::lower_bound(tags.begin(), tags.end(), tag);
  if (it != tags.end() && *it == tag) return static_cast<std::uint32_t>(it - tags.begin());
  return std::nullopt;
}

std::optional<std::uint32_t> UserStore::domain_id(std::string_view domain) const {
  auto it = std::lower_bound(domains.begin(), domains.end(), domain);
  if (it != domains.end() && *it == domain) return static_cast<std::uint32_t>(it - domains.begin());
  return std::nullopt;
}

// --- file ingestion ---------------------------------------------------------------

IngestCounters for_each_record(const std::string& path, const SchemaConfig& schema,
                               const WindowSpec& window,
                               const std::function<void(TweetRecord&&)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus '" + path + "'");
  IngestCounters counters;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (auto rec = parse_tweet_line(line, schema, window, counters)) fn(std::move(*rec));
  }
  return counters;
}

UserStore ingest_file(const std::string& path, const SchemaConfig& schema,
                      const WindowSpec& window, int jobs) {
  BiweeklySpec buckets = BiweeklySpec::for_window(window);
  if (jobs <= 1) {
    UserStoreBuilder builder(window, buckets);
    builder.counters = for_each_record(path, schema, window,
                                       [&](TweetRecord&& rec) { builder.add(rec); });
    return std::move(builder).finalize();
  }

  std::string content = read_text_file(path);
  // shard boundaries snapped to line breaks
  std::vector<std::pair<std::size_t, std::size_t>> shards;
  std::size_t approx = content.size() / static_cast<std::size_t>(jobs) + 1;
  std::size_t begin = 0;
  while (begin < content.size()) {
    std::size_t end = std::min(content.size(), begin + approx);
    while (end < content.size() && content[end] != '\n') ++end;
    shards.emplace_back(begin, end);
    begin = end + 1;
  }

  std::vector<UserStoreBuilder> builders;
  builders.reserve(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) builders.emplace_back(window, buckets);

  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    workers.emplace_back([&, i] {
      std::string_view chunk(content.data() + shards[i].first,
                             shards[i].second - shards[i].first);
      std::size_t pos = 0;
      while (pos < chunk.size()) {
        std::size_t nl = chunk.find('\n', pos);
        std::string_view line = chunk.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? chunk.size() : nl + 1;
        if (line.empty()) continue;
        if (auto rec = parse_tweet_line(line, schema, window, builders[i].counters))
          builders[i].add(*rec);
      }
    });
  }
  for (auto& w : workers) w.join();
  for (std::size_t i = 1; i < builders.size(); ++i) builders[0].merge(std::move(builders[i]));
  return std::move(builders[0]).finalize();
}

// --- users.bin --------------------------------------------------------------------

namespace {
constexpr char kUserMagic[4] = {'P', 'L', 'Z', 'U'};
constexpr std::uint32_t kUserVersion = 1;
}  // namespace

void save_user_store(const UserStore& store, const std::string& path) {
  BinWriter w(path);
  w.raw(kUserMagic, 4);
  w.u32(kUserVersion);
  w.i64(store.window.start_day);
  w.i64(store.window.end_day);
  w.u32(static_cast<std::uint32_t>(store.buckets.intervals.size()));
  for (const auto& iv : store.buckets.intervals) {
    w.i64(iv.start_day);
    w.i64(iv.end_day);
  }
  w.u64(store.counters.parsed);
  w.u64(store.counters.skipped_malformed);
  w.u64(store.counters.skipped_window);
  w.u32(static_cast<std::uint32_t>(store.tags.size()));
  for (const auto& t : store.tags) w.str(t);
  w.u32(static_cast<std::uint32_t>(store.domains.size()));
  for (const auto& d : store.domains) w.str(d);
  w.u64(store.users.size());
  for (const auto& u : store.users) {
    w.str(u.user_id);
    w.str(u.state ? *u.state : std::string());
    w.str(u.doc_text);
    w.u32(static_cast<std::uint32_t>(u.hashtag_counts.size()));
    for (auto& [t, c] : u.hashtag_counts) w.u32(t), w.u32(c);
    w.u32(static_cast<std::uint32_t>(u.shared_domains.size()));
    for (auto& [d, c] : u.shared_domains) w.u32(d), w.u32(c);
    w.u32(static_cast<std::uint32_t>(u.per_bucket_domains.size()));
    for (auto& [b, m] : u.per_bucket_domains) {
      w.u32(static_cast<std::uint32_t>(b));
      w.u32(static_cast<std::uint32_t>(m.size()));
      for (auto& [d, c] : m) w.u32(d), w.u32(c);
    }
    w.u32(static_cast<std::uint32_t>(u.per_bucket_tweets.size()));
    for (auto& [b, c] : u.per_bucket_tweets) w.u32(static_cast<std::uint32_t>(b)), w.u32(c);
    w.u32(static_cast<std::uint32_t>(u.tweet_tag_sets.size()));
    for (const auto& ids : u.tweet_tag_sets) {
      w.u32(static_cast<std::uint32_t>(ids.size()));
      for (auto id : ids) w.u32(id);
    }
  }
  w.close();
}

UserStore load_user_store(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kUserMagic, "users");
  std::uint32_t version = r.u32();
  if (version != kUserVersion)
    throw ValidationError("users artifact version " + std::to_string(version) + " unsupported");
  UserStore store;
  store.window.start_day = r.i64();
  store.window.end_day = r.i64();
  std::uint32_t nb = r.u32();
  for (std::uint32_t i = 0; i < nb; ++i) {
    std::int64_t s = r.i64(), e = r.i64();
    store.buckets.intervals.push_back({s, e});
  }
  store.counters.parsed = r.u64();
  store.counters.skipped_malformed = r.u64();
  store.counters.skipped_window = r.u64();
  std::uint32_t nt = r.u32();
  store.tags.reserve(nt);
  for (std::uint32_t i = 0; i < nt; ++i) store.tags.push_back(r.str());
  std::uint32_t nd = r.u32();
  store.domains.reserve(nd);
  for (std::uint32_t i = 0; i < nd; ++i) store.domains.push_back(r.str());
  std::uint64_t nu = r.u64();
  store.users.reserve(nu);
  for (std::uint64_t i = 0; i < nu; ++i) {
    UserAggregate u;
    u.user_id = r.str();
    std::string state = r.str();
    if (!state.empty()) u.state = state;
    u.doc_text = r.str();
    for (std::uint32_t k = r.u32(); k > 0; --k) {
      std::uint32_t t = r.u32(), c = r.u32();
      u.hashtag_counts[t] = c;
    }
    for (std::uint32_t k = r.u32(); k > 0; --k) {
      std::uint32_t d = r.u32(), c = r.u32();
      u.shared_domains[d] = c;
    }
    for (std::uint32_t k = r.u32(); k > 0; --k) {
      int b = static_cast<int>(r.u32());
      auto& m = u.per_bucket_domains[b];
      for (std::uint32_t j = r.u32(); j > 0; --j) {
        std::uint32_t d = r.u32(), c = r.u32();
        m[d] = c;
      }
    }
    for (std::uint32_t k = r.u32(); k > 0; --k) {
      std::uint32_t b = r.u32(), c = r.u32();
      u.per_bucket_tweets[static_cast<int>(b)] = c;
    }
    for (std::uint32_t k = r.u32(); k > 0; --k) {
      std::vector<std::uint32_t> ids(r.u32());
      for (auto& id : ids) id = r.u32();
      u.tweet_tag_sets.push_back(std::move(ids));
    }
    store.users.push_back(std::move(u));
  }
  return store;
}

}  // namespace polarlens
