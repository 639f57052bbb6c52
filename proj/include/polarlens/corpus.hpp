#pragma once
// Tweet corpus ingestion: line-delimited record parsing, text normalization,
// per-user aggregation and the users.bin artifact.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polarlens/common.hpp"
#include "polarlens/dates.hpp"

namespace polarlens {

// One parsed post, normalized: hashtags lowercase without '#', timestamps UTC.
struct TweetRecord {
  std::string tweet_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // UTC epoch seconds
  std::string text;
  std::vector<std::string> hashtags;
  std::vector<std::string> urls;
  std::optional<std::string> retweeted_user_id;
  std::optional<std::string> state;
};

// Key names of the line-delimited input. Hydrated exports from other tools
// map onto the same parser by renaming keys here.
struct SchemaConfig {
  std::string id_key = "id";
  std::string user_key = "user_id";
  std::string time_key = "created_at";
  std::string text_key = "text";
  std::string urls_key = "urls";
  std::string hashtags_key = "hashtags";
  std::string retweet_key = "retweeted_user_id";
  std::string location_key = "user_location";

  static SchemaConfig from_json_file(const std::string& path);
};

struct IngestCounters {
  std::uint64_t parsed = 0;
  std::uint64_t skipped_malformed = 0;
  std::uint64_t skipped_window = 0;

  void add(const IngestCounters& o) {
    parsed += o.parsed;
    skipped_malformed += o.skipped_malformed;
    skipped_window += o.skipped_window;
  }
};

// --- text normalization -----------------------------------------------------

// Lowercases ASCII and the Latin-1 letter range; other code points pass
// through unchanged.
std::string unicode_lowercase(std::string_view s);

// Composes ASCII base letters followed by combining diacritics (U+0300..036F)
// into their precomposed Latin-1 / Latin Extended-A forms. Sequences without
// a precomposed form are left alone.
std::string nfc_compose(std::string_view s);

// Lowercase, strip one leading '#', keep letters/digits/underscore.
// Empty result means the tag should be dropped.
std::string normalize_hashtag(std::string_view raw);

std::vector<std::string> extract_hashtags(std::string_view text);
std::vector<std::string> extract_urls(std::string_view text);

// Registrable domain of a URL or bare hostname: scheme/path/port and one
// leading "www." dropped, multi-part public suffixes ("co.uk") respected via
// a small built-in list, unknown suffixes fall back to the last two labels.
std::optional<std::string> extract_domain(std::string_view url);

// --- geography ---------------------------------------------------------------

// US state matcher over profile location text. Full names and 2-letter codes,
// case-insensitive, word-boundary matches; a unique matched state wins,
// anything else is none. A stand-in for upstream geocoding.
class Gazetteer {
 public:
  static const Gazetteer& builtin();
  std::optional<std::string> match(std::string_view profile_location) const;

 private:
  Gazetteer();
  std::vector<std::pair<std::string, std::string>> names_;  // lowercased name -> code
};

inline std::optional<std::string> match_state(std::string_view loc, const Gazetteer& gaz) {
  return gaz.match(loc);
}

// --- parsing -----------------------------------------------------------------

// Parses one line of the record format. Returns nullopt for skipped records;
// counters say why. Never throws on malformed input.
std::optional<TweetRecord> parse_tweet_line(std::string_view line, const SchemaConfig& schema,
                                            const WindowSpec& window, IngestCounters& counters);

// --- aggregation -------------------------------------------------------------

// Per-user aggregate. Hashtags and domains are interned against the per-store
// string tables; tweet_tag_sets holds the distinct tag ids of each tweet that
// carried at least two distinct tags (what seed co-occurrence counting needs).
struct UserAggregate {
  std::string user_id;
  std::optional<std::string> state;
  std::string doc_text;  // tweets joined by '\n' in (timestamp, tweet_id) order
  std::map<std::uint32_t, std::uint32_t> hashtag_counts;
  std::map<std::uint32_t, std::uint32_t> shared_domains;
  std::map<int, std::map<std::uint32_t, std::uint32_t>> per_bucket_domains;
  std::map<int, std::uint32_t> per_bucket_tweets;
  std::vector<std::vector<std::uint32_t>> tweet_tag_sets;

  std::uint64_t total_tweets() const {
    std::uint64_t n = 0;
    for (auto& [b, c] : per_bucket_tweets) n += c;
    return n;
  }
};

struct UserStore {
  WindowSpec window;
  BiweeklySpec buckets;
  IngestCounters counters;
  std::vector<std::string> tags;     // tag id -> hashtag
  std::vector<std::string> domains;  // domain id -> registrable domain
  std::vector<UserAggregate> users;  // sorted by user_id

  const UserAggregate* find(std::string_view user_id) const;
  std::optional<std::uint32_t> tag_id(std::string_view tag) const;
  std::optional<std::uint32_t> domain_id(std::string_view domain) const;
};

// Accumulates records into per-user pending state; finalize() sorts tweets by
// (timestamp, tweet_id) and users by id, so the result is independent of the
// input permutation. merge() gives sharded ingestion an associative combine.
class UserStoreBuilder {
 public:
  UserStoreBuilder(WindowSpec window, BiweeklySpec buckets);
  void add(const TweetRecord& rec);
  void merge(UserStoreBuilder&& other);
  UserStore finalize() &&;

  IngestCounters counters;

 private:
  struct TaggedText {
    std::int64_t ts;
    std::string tweet_id;
    std::string text;
  };
  struct TaggedSet {
    std::int64_t ts;
    std::string tweet_id;
    std::vector<std::string> tags;
  };
  struct Pending {
    std::map<std::string, std::uint32_t> state_votes;
    std::vector<TaggedText> texts;
    std::vector<TaggedSet> tag_sets;
    std::map<std::string, std::uint32_t> hashtag_counts;
    std::map<std::string, std::uint32_t> shared_domains;
    std::map<int, std::map<std::string, std::uint32_t>> per_bucket_domains;
    std::map<int, std::uint32_t> per_bucket_tweets;
  };

  WindowSpec window_;
  BiweeklySpec buckets_;
  std::map<std::string, Pending> users_;
};

// Streams a record file through `fn`; returns counters. Single-threaded.
IngestCounters for_each_record(const std::string& path, const SchemaConfig& schema,
                               const WindowSpec& window,
                               const std::function<void(TweetRecord&&)>& fn);

// Full ingest of a record file. jobs > 1 parses shards on worker threads and
// merges the partial aggregates.
UserStore ingest_file(const std::string& path, const SchemaConfig& schema,
                      const WindowSpec& window, int jobs = 1);

void save_user_store(const UserStore& store, const std::string& path);
UserStore load_user_store(const std::string& path);

}  // namespace polarlens
