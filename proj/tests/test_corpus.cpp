#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "polarlens/corpus.hpp"
#include "polarlens/io_util.hpp"

using namespace polarlens;
using namespace polarlens::testing;

namespace {
const WindowSpec kWindow = WindowSpec::paper_default();
const SchemaConfig kSchema;
}  // namespace

TEST_CASE("parse_tweet_line extracts the normalized record") {
  IngestCounters c;
  auto rec = parse_tweet_line(
      R"({"id":"1","user_id":"u1","created_at":"2020-03-01T10:00:00Z",)"
      R"("text":"RT @who Wash hands #StayHome https://cdc.gov/x"})",
      kSchema, kWindow, c);
  REQUIRE(rec.has_value());
  CHECK(rec->hashtags == std::vector<std::string>{"stayhome"});
  CHECK(rec->urls == std::vector<std::string>{"https://cdc.gov/x"});
  REQUIRE(rec->retweeted_user_id.has_value());
  CHECK(*rec->retweeted_user_id == "who");
  CHECK(c.parsed == 1);
}

TEST_CASE("parse_tweet_line skip paths") {
  IngestCounters c;
  SUBCASE("missing user_id") {
    auto rec = parse_tweet_line(R"({"id":"1","created_at":"2020-03-01T10:00:00Z","text":"x"})",
                                kSchema, kWindow, c);
    CHECK_FALSE(rec.has_value());
    CHECK(c.skipped_malformed == 1);
  }
  SUBCASE("timestamp outside the window") {
    auto rec = parse_tweet_line(
        R"({"id":"1","user_id":"u1","created_at":"2019-12-01T10:00:00Z","text":"x"})", kSchema,
        kWindow, c);
    CHECK_FALSE(rec.has_value());
    CHECK(c.skipped_window == 1);
  }
  SUBCASE("broken json never throws") {
    auto rec = parse_tweet_line("{nope", kSchema, kWindow, c);
    CHECK_FALSE(rec.has_value());
    CHECK(c.skipped_malformed == 1);
  }
  SUBCASE("explicit field arrays win over text extraction") {
    auto rec = parse_tweet_line(
        R"({"id":"2","user_id":"u1","created_at":"2020-03-01T10:00:00Z",)"
        R"("text":"#ignored https://ignored.example/x","hashtags":["#Kept"],)"
        R"("urls":["https://kept.example/y"],"retweeted_user_id":"u9"})",
        kSchema, kWindow, c);
    REQUIRE(rec.has_value());
    CHECK(rec->hashtags == std::vector<std::string>{"kept"});
    CHECK(rec->urls == std::vector<std::string>{"https://kept.example/y"});
    CHECK(*rec->retweeted_user_id == "u9");
  }
  SUBCASE("numeric ids are accepted") {
    auto rec = parse_tweet_line(
        R"({"id":12345,"user_id":67890,"created_at":"2020-03-01T10:00:00Z","text":"x"})", kSchema,
        kWindow, c);
    REQUIRE(rec.has_value());
    CHECK(rec->tweet_id == "12345");
    CHECK(rec->user_id == "67890");
  }
}

TEST_CASE("extract_domain registrable domains") {
  CHECK(extract_domain("https://www.cdc.gov/covid") == "cdc.gov");
  CHECK(extract_domain("http://prison-planet.com:80/a?b=1") == "prison-planet.com");
  CHECK_FALSE(extract_domain("not a url").has_value());
  CHECK(extract_domain("https://a.b.cdc.gov/page") == "cdc.gov");
  CHECK(extract_domain("http://news.bbc.co.uk/x") == "bbc.co.uk");
  CHECK_FALSE(extract_domain("https://co.uk/x").has_value());
  CHECK(extract_domain("HTTPS://WWW.Example.COM/Path") == "example.com");
  CHECK(extract_domain("cdc.gov") == "cdc.gov");  // bare hostname
  CHECK_FALSE(extract_domain("http://127.0.0.1:8080/x").has_value());
  CHECK_FALSE(extract_domain("").has_value());
  CHECK_FALSE(extract_domain("https://").has_value());
}

TEST_CASE("extract_domain is idempotent") {
  const char* urls[] = {
      "https://www.cdc.gov/covid",  "http://prison-planet.com:80/a?b=1",
      "http://news.bbc.co.uk/x",    "https://user@host.example.org/y",
      "https://nature.com",         "http://www.who.int/emergencies",
  };
  for (const char* u : urls) {
    auto first = extract_domain(u);
    REQUIRE(first.has_value());
    CHECK(extract_domain(*first) == *first);
  }
}

TEST_CASE("match_state") {
  const auto& gaz = Gazetteer::builtin();
  CHECK(gaz.match("Los Angeles, CA") == "CA");
  CHECK_FALSE(gaz.match("Kansas City, Missouri and Kansas").has_value());
  CHECK_FALSE(gaz.match("somewhere on Earth").has_value());
  CHECK(gaz.match("new york city") == "NY");
  CHECK(gaz.match("Austin, Texas TX") == "TX");  // name + code, one state
  CHECK_FALSE(gaz.match("").has_value());
  CHECK_FALSE(gaz.match("arkansas kansas").has_value());  // two states
  CHECK(gaz.match("ARKANSAS") == "AR");                   // no substring bleed
}

TEST_CASE("hashtag normalization") {
  CHECK(normalize_hashtag("#StayHome") == "stayhome");
  CHECK(normalize_hashtag("stay home") == "stayhome");  // whitespace never survives
  CHECK(normalize_hashtag("#COVID-19") == "covid19");
  CHECK(normalize_hashtag("#_under_score_") == "_under_score_");
  CHECK(normalize_hashtag("#") == "");
  CHECK(normalize_hashtag("Cafe\xcc\x81") == "caf\xc3\xa9");  // combining acute composes
}

TEST_CASE("text hashtag and url extraction") {
  auto tags = extract_hashtags("go #One two#ignored #two_2 #");
  CHECK(tags == std::vector<std::string>{"one", "two_2"});
  auto urls = extract_urls("see https://a.example/x, and (http://b.example/y)");
  CHECK(urls == std::vector<std::string>{"https://a.example/x", "http://b.example/y"});
}

TEST_CASE("aggregation examples") {
  std::vector<TweetRecord> records = {
      RecordBuilder("u1", "t1", ts(2020, 1, 25)).tags({"covid"}).urls({"https://cdc.gov/a"}),
      RecordBuilder("u1", "t2", ts(2020, 4, 20)).tags({"covid"}).urls({"https://who.int/b"}),
      RecordBuilder("u2", "t3", ts(2020, 2, 2)).text("no urls here"),
  };
  UserStore store = store_from(records);
  const UserAggregate* u1 = store.find("u1");
  REQUIRE(u1);
  CHECK(u1->hashtag_counts.at(*store.tag_id("covid")) == 2);
  CHECK(u1->per_bucket_domains.count(1) == 1);
  CHECK(u1->per_bucket_domains.count(7) == 1);
  CHECK(u1->per_bucket_tweets.at(1) == 1);
  const UserAggregate* u2 = store.find("u2");
  REQUIRE(u2);
  CHECK(u2->shared_domains.empty());
}

TEST_CASE("hashtag conservation over random corpora") {
  std::mt19937_64 rng(99);
  std::vector<TweetRecord> records;
  std::uint64_t total_tags = 0;
  const char* pool[] = {"a", "b", "c", "dd", "ee"};
  for (int i = 0; i < 300; ++i) {
    RecordBuilder rb("u" + std::to_string(rng() % 20), "t" + std::to_string(i),
                     ts(2020, 2, 1 + static_cast<int>(rng() % 28)));
    std::vector<std::string> tags;
    int n = static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) tags.push_back(pool[rng() % 5]);
    total_tags += tags.size();
    rb.tags(tags);
    records.push_back(rb);
  }
  UserStore store = store_from(records);
  std::uint64_t sum = 0;
  for (const auto& u : store.users)
    for (auto& [tag, c] : u.hashtag_counts) sum += c;
  CHECK(sum == total_tags);
}

TEST_CASE("aggregation is order independent") {
  std::vector<TweetRecord> records = {
      RecordBuilder("u1", "t1", ts(2020, 1, 25)).text("first").tags({"x", "y"}).state("TX"),
      RecordBuilder("u1", "t2", ts(2020, 2, 2)).text("second").urls({"https://cdc.gov/a"}),
      RecordBuilder("u2", "t3", ts(2020, 2, 2)).text("other").tags({"y"}),
      RecordBuilder("u1", "t4", ts(2020, 2, 2, 13)).text("third").state("TX"),
  };
  UserStore forward = store_from(records);
  std::reverse(records.begin(), records.end());
  UserStore backward = store_from(records);

  std::string a = temp_dir("order") + "/a.bin";
  std::string b = temp_dir("order") + "/b.bin";
  save_user_store(forward, a);
  save_user_store(backward, b);
  CHECK(file_fnv1a_hex(a) == file_fnv1a_hex(b));
  CHECK(forward.find("u1")->doc_text == "first\nsecond\nthird");
}

TEST_CASE("sharded builders merge to the same store") {
  std::vector<TweetRecord> records;
  for (int i = 0; i < 40; ++i) {
    records.push_back(RecordBuilder("u" + std::to_string(i % 7), "t" + std::to_string(i),
                                    ts(2020, 3, 1 + i % 20))
                          .text("text " + std::to_string(i))
                          .tags({i % 2 ? "odd" : "even", "all"})
                          .urls({"https://cdc.gov/" + std::to_string(i)}));
  }
  UserStore whole = store_from(records);

  BiweeklySpec buckets = BiweeklySpec::for_window(kWindow);
  UserStoreBuilder left(kWindow, buckets), right(kWindow, buckets);
  for (std::size_t i = 0; i < records.size(); ++i)
    (i % 2 ? left : right).add(records[i]);
  left.merge(std::move(right));
  left.counters.parsed = records.size();
  UserStore merged = std::move(left).finalize();

  std::string a = temp_dir("shard") + "/a.bin";
  std::string b = temp_dir("shard") + "/b.bin";
  save_user_store(whole, a);
  save_user_store(merged, b);
  CHECK(file_fnv1a_hex(a) == file_fnv1a_hex(b));
}

TEST_CASE("users artifact round trip") {
  std::vector<TweetRecord> records = {
      RecordBuilder("u1", "t1", ts(2020, 1, 25)).text("hello").tags({"x", "y"}).state("CA").urls(
          {"https://cdc.gov/a", "https://cdc.gov/b"}),
      RecordBuilder("u2", "t2", ts(2020, 4, 30)).text("unicode caf\xc3\xa9").tags({"z"}),
  };
  UserStore store = store_from(records);
  std::string path = temp_dir("roundtrip") + "/users.bin";
  save_user_store(store, path);
  UserStore loaded = load_user_store(path);

  REQUIRE(loaded.users.size() == store.users.size());
  CHECK(loaded.tags == store.tags);
  CHECK(loaded.domains == store.domains);
  CHECK(loaded.window == store.window);
  CHECK(loaded.buckets.count() == store.buckets.count());
  for (std::size_t i = 0; i < store.users.size(); ++i) {
    CHECK(loaded.users[i].user_id == store.users[i].user_id);
    CHECK(loaded.users[i].doc_text == store.users[i].doc_text);
    CHECK(loaded.users[i].hashtag_counts == store.users[i].hashtag_counts);
    CHECK(loaded.users[i].shared_domains == store.users[i].shared_domains);
    CHECK(loaded.users[i].per_bucket_domains == store.users[i].per_bucket_domains);
    CHECK(loaded.users[i].per_bucket_tweets == store.users[i].per_bucket_tweets);
    CHECK(loaded.users[i].tweet_tag_sets == store.users[i].tweet_tag_sets);
    CHECK(loaded.users[i].state == store.users[i].state);
  }
}

TEST_CASE("parser survives arbitrary garbage without throwing") {
  std::mt19937_64 rng(1234);
  IngestCounters c;
  const char alphabet[] = "{}[]\":,abc\\u00e9\x01\xff #@/.-0123456789";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string line;
    std::size_t len = rng() % 80;
    for (std::size_t i = 0; i < len; ++i) line.push_back(alphabet[rng() % (sizeof alphabet - 1)]);
    CHECK_NOTHROW(parse_tweet_line(line, kSchema, kWindow, c));
  }
  // every line was either parsed or counted as a skip
  CHECK(c.parsed + c.skipped_malformed + c.skipped_window == 2000);
}

TEST_CASE("ingest_file single and sharded agree") {
  std::string dir = temp_dir("ingest");
  std::string path = dir + "/corpus.jsonl";
  {
    std::ofstream out(path);
    for (int i = 0; i < 50; ++i)
      out << R"({"id":")" << i << R"(","user_id":"u)" << i % 5
          << R"(","created_at":"2020-03-0)" << (1 + i % 9)
          << R"(T10:00:00Z","text":"tweet )" << i << R"( #tag)" << i % 3 << R"("})"
          << "\n";
  }
  UserStore one = ingest_file(path, kSchema, kWindow, 1);
  UserStore four = ingest_file(path, kSchema, kWindow, 4);
  CHECK(one.counters.parsed == 50);
  CHECK(four.counters.parsed == 50);
  std::string a = dir + "/a.bin", b = dir + "/b.bin";
  save_user_store(one, a);
  save_user_store(four, b);
  CHECK(file_fnv1a_hex(a) == file_fnv1a_hex(b));
}
