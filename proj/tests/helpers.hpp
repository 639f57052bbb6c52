#pragma once
// Shared helpers for the unit suites: record builders, tiny stores, temp dirs.

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "polarlens/corpus.hpp"
#include "polarlens/dates.hpp"

namespace polarlens::testing {

inline std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("polarlens_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::int64_t ts(int y, unsigned m, unsigned d, int hh = 12, int mm = 0, int ss = 0) {
  return days_from_civil(y, m, d) * 86400 + hh * 3600 + mm * 60 + ss;
}

struct RecordBuilder {
  TweetRecord rec;

  RecordBuilder(std::string user, std::string id, std::int64_t when) {
    rec.user_id = std::move(user);
    rec.tweet_id = std::move(id);
    rec.timestamp = when;
  }
  RecordBuilder& text(std::string t) {
    rec.text = std::move(t);
    return *this;
  }
  RecordBuilder& tags(std::vector<std::string> t) {
    rec.hashtags = std::move(t);
    return *this;
  }
  RecordBuilder& urls(std::vector<std::string> u) {
    rec.urls = std::move(u);
    return *this;
  }
  RecordBuilder& retweets(std::string who) {
    rec.retweeted_user_id = std::move(who);
    return *this;
  }
  RecordBuilder& state(std::string s) {
    rec.state = std::move(s);
    return *this;
  }
  operator TweetRecord() const { return rec; }
};

inline UserStore store_from(const std::vector<TweetRecord>& records,
                            WindowSpec window = WindowSpec::paper_default()) {
  UserStoreBuilder builder(window, BiweeklySpec::for_window(window));
  for (const auto& r : records) builder.add(r);
  builder.counters.parsed = records.size();
  return std::move(builder).finalize();
}

}  // namespace polarlens::testing
