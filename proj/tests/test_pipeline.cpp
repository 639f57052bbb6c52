#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "helpers.hpp"
#include "polarlens/io_util.hpp"
#include "polarlens/pipeline.hpp"

using namespace polarlens;
using namespace polarlens::testing;
using nlohmann::json;

namespace {

// one synth corpus shared by the stage tests
struct Fixture {
  std::string dir;
  std::string corpus, truth, aux, users, scores;

  Fixture() {
    dir = temp_dir("pipeline");
    corpus = dir + "/corpus.jsonl";
    truth = dir + "/truth.csv";
    aux = dir + "/aux";
    users = dir + "/users.bin";
    scores = dir + "/scores.csv";
    run_stage("synth", {{"out", corpus}, {"truth", truth}, {"aux_dir", aux}, {"n_users", 48}});
    run_stage("ingest", {{"input", corpus}, {"out", users}});
    run_stage("score",
              {{"users", users}, {"catalog_dir", aux + "/catalogs"}, {"out", scores}});
  }
};

}  // namespace

TEST_CASE("unknown stage and bad config are validation errors") {
  CHECK_THROWS_AS(run_stage("nope", json::object()), ValidationError);
  CHECK_THROWS_AS(run_stage("ingest", json::array()), ValidationError);
  CHECK_THROWS_AS(run_stage("ingest", {{"out", "x"}}), ValidationError);  // input missing
}

TEST_CASE("stage ordering errors name the producer stage") {
  std::string dir = temp_dir("ordering");
  CHECK_THROWS_WITH_AS(run_stage("train", {{"features", dir + "/feats.csv"},
                                           {"labels", dir + "/scores.csv"},
                                           {"dim", "science"},
                                           {"out", dir + "/model.json"}}),
                       doctest::Contains("run the features stage first"), ValidationError);
  {
    std::ofstream f(dir + "/feats.csv");
    f << "user_id,v0\nu0,1\n";
  }
  CHECK_THROWS_WITH_AS(run_stage("train", {{"features", dir + "/feats.csv"},
                                           {"labels", dir + "/scores.csv"},
                                           {"dim", "science"},
                                           {"out", dir + "/model.json"}}),
                       doctest::Contains("run the score stage first"), ValidationError);
  CHECK_THROWS_WITH_AS(run_stage("ingest", {{"input", dir + "/missing.jsonl"},
                                            {"out", dir + "/u.bin"}}),
                       doctest::Contains("run the synth stage first"), ValidationError);
}

TEST_CASE("ingest/score produce artifacts, sidecars and manifests") {
  Fixture fx;
  CHECK(file_exists(fx.users));
  CHECK(file_exists(fx.scores));
  CHECK(file_exists(fx.dir + "/scores.cutoffs.json"));
  CHECK(file_exists(fx.users + ".manifest.json"));

  json manifest = json::parse(read_text_file(fx.users + ".manifest.json"));
  CHECK(manifest.at("stage") == "ingest");
  CHECK(manifest.at("inputs").contains("corpus"));
  CHECK(manifest.at("config").at("counters").at("parsed").get<std::uint64_t>() > 0);

  json cutoffs = json::parse(read_text_file(fx.dir + "/scores.cutoffs.json"));
  for (const char* dim : {"science", "political", "moderacy"}) {
    REQUIRE(cutoffs.contains(dim));
    CHECK(cutoffs[dim].at("n_eligible").get<std::size_t>() > 0);
  }
}

TEST_CASE("rerun with identical inputs is byte-identical") {
  Fixture fx;
  std::string first_users = file_fnv1a_hex(fx.users);
  std::string first_scores = file_fnv1a_hex(fx.scores);
  run_stage("ingest", {{"input", fx.corpus}, {"out", fx.users}});
  run_stage("score",
            {{"users", fx.users}, {"catalog_dir", fx.aux + "/catalogs"}, {"out", fx.scores}});
  CHECK(file_fnv1a_hex(fx.users) == first_users);
  CHECK(file_fnv1a_hex(fx.scores) == first_scores);
}

TEST_CASE("graph and lpa stages") {
  Fixture fx;
  std::string graph_path = fx.dir + "/graph.bin";
  StageResult g = run_stage("graph", {{"input", fx.corpus}, {"out", graph_path}});
  CHECK(g.manifest.at("config").at("stats").at("nodes").get<std::uint64_t>() > 0);

  std::string labels_path = fx.dir + "/labels.csv";
  StageResult l = run_stage("lpa", {{"graph", graph_path},
                                    {"seeds", fx.aux + "/seeds/science.tsv"},
                                    {"dim", "science"},
                                    {"rng", 42},
                                    {"eval_folds", 3},
                                    {"out", labels_path}});
  CHECK(file_exists(labels_path));
  json log = json::parse(read_text_file(fx.dir + "/labels.log.json"));
  CHECK(log.at("clamped_seeds").get<int>() > 0);
  CHECK(log.contains("holdout"));
}

TEST_CASE("feature, train, classify, analyze and report stages chain") {
  Fixture fx;
  // embed features + train + classify
  std::string emb = fx.dir + "/feats_emb.csv";
  run_stage("features_embed",
            {{"users", fx.users}, {"vectors", fx.aux + "/vectors.txt"}, {"out", emb}});
  CHECK(file_exists(emb));

  std::string model_path = fx.dir + "/model_sci.json";
  StageResult t = run_stage("train", {{"features", emb},
                                      {"labels", fx.scores},
                                      {"dim", "science"},
                                      {"folds", 3},
                                      {"epochs", 80},
                                      {"out", model_path}});
  CHECK(t.manifest.at("config").at("kind") == "embed");
  CHECK(t.manifest.at("config").at("cv_accuracy").get<double>() > 0.9);

  std::string labels_all = fx.dir + "/labels_all.csv";
  run_stage("classify", {{"model", model_path}, {"features", emb}, {"out", labels_all}});
  CHECK(file_exists(labels_all));

  // bow + lda features exist and are loadable
  std::string bow = fx.dir + "/feats_bow.csv";
  run_stage("features_bow",
            {{"users", fx.users}, {"dim", "science"}, {"k", 50}, {"out", bow}});
  CHECK(file_exists(fx.dir + "/feats_bow.vocab.json"));
  std::string lda = fx.dir + "/feats_lda.csv";
  run_stage("features_lda", {{"users", fx.users},
                             {"k", 4},
                             {"sweeps", 60},
                             {"burn_in", 20},
                             {"min_users", 2},
                             {"out", lda}});
  CHECK(file_exists(fx.dir + "/feats_lda.model.json"));

  // analyze from score bins
  std::string analysis = fx.dir + "/analysis";
  StageResult a = run_stage("analyze", {{"users", fx.users},
                                        {"catalog_dir", fx.aux + "/catalogs"},
                                        {"scores", fx.scores},
                                        {"min_state_users", 1},
                                        {"out_dir", analysis}});
  for (const char* name : {"delta_series.csv", "group_activity.csv", "group_hashtags.csv",
                           "state_fractions.csv", "heatmaps.json", "groups.csv"})
    CHECK(file_exists(analysis + "/" + name));
  CHECK(a.manifest.at("config").at("n_grouped_users").get<std::size_t>() > 0);

  // analyze can take classifier labels instead of score bins
  std::string analysis2 = fx.dir + "/analysis_clf";
  run_stage("analyze", {{"users", fx.users},
                        {"catalog_dir", fx.aux + "/catalogs"},
                        {"scores", fx.scores},
                        {"labels_science", labels_all},
                        {"min_state_users", 1},
                        {"out_dir", analysis2}});
  CHECK(file_exists(analysis2 + "/groups.csv"));

  // report bundles analysis + eval rows
  std::string bundle = fx.dir + "/report";
  StageResult r = run_stage("report", {{"analysis_dir", analysis},
                                       {"out_dir", bundle},
                                       {"models", json::array({model_path})}});
  for (const char* name :
       {"delta_series.csv", "group_activity.csv", "group_hashtags.csv", "state_fractions.csv",
        "heatmaps.json", "eval_reports.json", "versions.json"})
    CHECK(file_exists(bundle + "/" + name));
  json eval = json::parse(read_text_file(bundle + "/eval_reports.json"));
  REQUIRE(eval.at("rows").size() == 1);
  CHECK(eval.at("rows")[0].at("dimension") == "science");
  CHECK(eval.at("notes").size() == 8);  // 3 kinds x 3 dims minus the one provided
  (void)r;
}

TEST_CASE("report without analysis lists the missing pieces") {
  std::string dir = temp_dir("noreport");
  CHECK_THROWS_WITH_AS(
      run_stage("report", {{"analysis_dir", dir}, {"out_dir", dir + "/bundle"}}),
      doctest::Contains("analyze"), ValidationError);
}

TEST_CASE("config file keys merge and flags win") {
  std::string dir = temp_dir("kv");
  std::string path = dir + "/polarlens.conf";
  {
    std::ofstream out(path);
    out << "# pipeline defaults\n";
    out << "min_domains = 4\n";
    out << "score.q = 0.25\n";
    out << "lpa.rng = 9\n";
  }
  json cfg = kv_config_for_stage(path, "score");
  CHECK(cfg.at("min_domains") == "4");
  CHECK(cfg.at("q") == "0.25");
  CHECK_FALSE(cfg.contains("rng"));  // other stage's namespace

  json lpa_cfg = kv_config_for_stage(path, "lpa");
  CHECK(lpa_cfg.at("rng") == "9");
  CHECK(lpa_cfg.at("min_domains") == "4");  // bare keys apply everywhere
}

TEST_CASE("published cutoffs can be pinned from config") {
  Fixture fx;
  std::string out = fx.dir + "/pinned_scores.csv";
  run_stage("score", {{"users", fx.users},
                      {"catalog_dir", fx.aux + "/catalogs"},
                      {"out", out},
                      {"cutoffs_science", "-1:0.42"},
                      {"cutoffs_moderacy", json::array({-0.18, 0.38})}});
  json cutoffs = json::parse(read_text_file(fx.dir + "/pinned_scores.cutoffs.json"));
  CHECK(cutoffs["science"]["lo"] == -1.0);
  CHECK(cutoffs["science"]["hi"] == 0.42);
  CHECK(cutoffs["science"]["fixed"] == true);
  CHECK(cutoffs["moderacy"]["hi"] == 0.38);
  CHECK(cutoffs["political"]["fixed"] == false);

  CHECK_THROWS_AS(run_stage("score", {{"users", fx.users},
                                      {"catalog_dir", fx.aux + "/catalogs"},
                                      {"out", out},
                                      {"cutoffs_science", "sideways"}}),
                  ValidationError);
}

TEST_CASE("threshold ranges are validated") {
  Fixture fx;
  CHECK_THROWS_AS(run_stage("score", {{"users", fx.users},
                                      {"catalog_dir", fx.aux + "/catalogs"},
                                      {"out", fx.dir + "/s2.csv"},
                                      {"q", 0.8}}),
                  ValidationError);
  CHECK_THROWS_AS(run_stage("features_lda",
                            {{"users", fx.users}, {"out", fx.dir + "/l.csv"}, {"k", 1}}),
                  ValidationError);
  // users.bin exists, so the mode check is what fires
  CHECK_THROWS_WITH_AS(run_stage("lpa", {{"graph", fx.users},
                                         {"seeds", fx.aux + "/seeds/science.tsv"},
                                         {"dim", "science"},
                                         {"mode", "sideways"},
                                         {"out", fx.dir + "/l.csv"}}),
                       doctest::Contains("mode"), ValidationError);
}
