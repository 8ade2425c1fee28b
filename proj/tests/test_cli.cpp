#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "specs/embedding_store.hpp"
#include "specs/io.hpp"
#include "support.hpp"

using Json = nlohmann::ordered_json;
using specs::testing::slurp;
using specs::testing::spit;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = specs::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<Json> records(const std::string& text) {
  std::vector<Json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(Json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("segment reproduces the missing-split example") {
  specs::testing::TempDir dir("cli_seg");
  spit(dir.file("in.jsonl"), "{\"image_id\":\"p\",\"caption\":\"A front view of a statue on cement in a park.\"}\n");
  const auto r = run({"segment", "-i", dir.file("in.jsonl")});
  REQUIRE(r.code == 0);
  const auto recs = records(r.out);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].contains("_header"));
  CHECK(recs[1]["units"] == Json::array({"A front view of a statue on cement", "in a park."}));
  CHECK(recs[1]["caption"] == "A front view of a statue on cement in a park.");

  const auto loose = run({"segment", "-i", dir.file("in.jsonl"), "--no-attach-pps", "--no-hold-leading-pp"});
  CHECK(records(loose.out)[1]["units"] == Json::array({"A front view", "of a statue", "on cement", "in a park."}));
}

TEST_CASE("correlate on the three point fixture") {
  specs::testing::TempDir dir("cli_corr");
  spit(dir.file("s.jsonl"),
       "{\"image_id\":\"a\",\"caption_id\":\"1\",\"specs\":1}\n{\"image_id\":\"a\",\"caption_id\":\"2\",\"specs\":2}\n"
       "{\"image_id\":\"a\",\"caption_id\":\"3\",\"specs\":3}\n");
  spit(dir.file("h.jsonl"),
       "{\"image_id\":\"a\",\"caption_id\":\"1\",\"human_score\":2}\n{\"image_id\":\"a\",\"caption_id\":\"2\",\"human_score\":1}\n"
       "{\"image_id\":\"a\",\"caption_id\":\"3\",\"human_score\":3}\n");
  const auto r = run({"correlate", "--scores", dir.file("s.jsonl"), "--human", dir.file("h.jsonl"), "--per-image",
                      "--buckets", "60,120,180", "--plot-csv", dir.file("plot.csv")});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["pooled"]["kendall_tau"].get<double>() == 1.0 / 3.0);
  CHECK(j["sample_wise_kendall"].get<double>() == 1.0 / 3.0);
  CHECK(j["buckets"].size() == 4);
  CHECK(j["_header"]["buckets"] == Json::array({60, 120, 180}));
  CHECK(slurp(dir.file("plot.csv")).rfind("image_id,caption_id,token_count,metric_score,human_score\n", 0) == 0);

  const auto csv = run({"correlate", "--scores", dir.file("s.jsonl"), "--human", dir.file("h.jsonl"), "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.find("pooled,,,3,0.5,") != std::string::npos);

  spit(dir.file("h2.jsonl"), "{\"image_id\":\"a\",\"caption_id\":\"1\",\"human_score\":2}\n");
  const auto missing = run({"correlate", "--scores", dir.file("s.jsonl"), "--human", dir.file("h2.jsonl")});
  CHECK(missing.code == 1);
  CHECK(Json::parse(missing.err)["error"] == "DataMissing");
}

TEST_CASE("usage and data errors") {
  auto r = run({});
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"] == "Usage");

  r = run({"frobnicate"});
  CHECK(r.code == 2);

  r = run({"sr", "--triplets", "t.jsonl"});
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err).contains("message"));

  r = run({"sr", "--triplets", "/nonexistent/t.jsonl", "--similarities", "s.jsonl"});
  CHECK(r.code == 1);
  CHECK(Json::parse(r.err)["error"] == "Io");

  r = run({"triplets", "--shuffle-rate", "2", "-i", "/dev/null"});
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"] == "BadConfig");

  r = run({"correlate", "--scores", "a", "--human", "b", "--format", "xml"});
  CHECK(r.code == 2);

  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gradcheck") != std::string::npos);
}

TEST_CASE("malformed input lines are data errors") {
  specs::testing::TempDir dir("cli_bad");
  spit(dir.file("in.jsonl"), "{\"image_id\":\"a\",\"caption\":\"a dog\"}\nnot json\n");
  const auto r = run({"segment", "-i", dir.file("in.jsonl")});
  CHECK(r.code == 1);
  CHECK(Json::parse(r.err)["message"].get<std::string>().find("line 2") != std::string::npos);
}

TEST_CASE("streamed triplets match whole-corpus forging") {
  specs::testing::TempDir dir("cli_trip");
  REQUIRE(run({"synth", "--images", "23", "--attributes", "8", "--seed", "4", "--features", dir.file("f.bin"),
               "--captions", dir.file("caps.jsonl")})
              .code == 0);
  REQUIRE(run({"triplets", "-i", dir.file("caps.jsonl"), "-o", dir.file("t.jsonl"), "--pool", "5", "--seed", "4"})
              .code == 0);

  std::ifstream caps(dir.file("caps.jsonl"));
  const auto corpus = specs::io::read_segmented(caps);
  specs::ForgeConfig cfg;
  cfg.pool_size = 5;
  cfg.seed = 4;
  const auto expected = specs::forge(corpus, cfg);

  const auto got = records(slurp(dir.file("t.jsonl")));
  REQUIRE(got.size() == expected.size() + 1);
  CHECK(got[0]["_header"]["pool"] == 5);
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(got[i + 1] == specs::io::triplet_to_json(expected[i]));
}

TEST_CASE("seed defaults come from the environment") {
  specs::testing::TempDir dir("cli_env");
  ::setenv("SPECS_SEED", "77", 1);
  const auto r = run({"synth", "--images", "5", "--attributes", "4", "--features", dir.file("f.bin")});
  ::unsetenv("SPECS_SEED");
  REQUIRE(r.code == 0);
  CHECK(records(r.out)[0]["_header"]["seed"] == 77);
  const auto explicit_seed =
      run({"synth", "--images", "5", "--attributes", "4", "--seed", "77", "--features", dir.file("g.bin")});
  const auto a = records(r.out), b = records(explicit_seed.out);
  CHECK(std::vector<Json>(a.begin() + 1, a.end()) == std::vector<Json>(b.begin() + 1, b.end()));
  CHECK(slurp(dir.file("f.bin")) == slurp(dir.file("g.bin")));
}

TEST_CASE("synth, triplets, train and sr are reproducible") {
  specs::testing::TempDir dir("cli_det");
  auto pipeline = [&]() {
    REQUIRE(run({"synth", "--images", "80", "--attributes", "16", "--seed", "5", "--features", dir.file("f.bin"),
                 "--captions", dir.file("caps.jsonl")})
                .code == 0);
    REQUIRE(run({"triplets", "-i", dir.file("caps.jsonl"), "-o", dir.file("t.jsonl"), "--seed", "5"}).code == 0);
    const auto tr = run({"train", "--triplets", dir.file("t.jsonl"), "--features", dir.file("f.bin"), "--model",
                         dir.file("m.bin"), "--log", dir.file("log.csv"), "--seed", "5", "--epochs", "3",
                         "--learning-rate", "1e-3"});
    REQUIRE(tr.code == 0);
    const auto sr = run({"sr", "--triplets", dir.file("t.jsonl"), "--model", dir.file("m.bin"), "--features",
                         dir.file("f.bin")});
    REQUIRE(sr.code == 0);
    return slurp(dir.file("f.bin")) + slurp(dir.file("caps.jsonl")) + slurp(dir.file("t.jsonl")) +
           slurp(dir.file("m.bin")) + slurp(dir.file("log.csv")) + tr.out + sr.out;
  };
  const std::string first = pipeline();
  const std::string second = pipeline();
  CHECK(first == second);

  const std::string log = slurp(dir.file("log.csv"));
  CHECK(log.rfind("# config {", 0) == 0);
  CHECK(log.find("\nepoch,contrastive,pos,neg,total,eps_pos,eps_neg,sr_pos,sr_neg\n") != std::string::npos);

  const auto csv = run({"sr", "--triplets", dir.file("t.jsonl"), "--model", dir.file("m.bin"), "--features",
                        dir.file("f.bin"), "--format", "csv"});
  CHECK(csv.out.find("sr_pos,sr_neg,average,n_pos,n_neg\n") != std::string::npos);
}

TEST_CASE("sr and score from precomputed embeddings") {
  specs::testing::TempDir dir("cli_emb");
  specs::EmbeddingTable images(2), texts(2);
  images.add("i", {1, 0});
  texts.add("a cat", {1, 1});
  texts.add("a cat on a mat", {2, 1});
  texts.add("a cat in snow", {0, 1});
  specs::save_table(dir.file("img.bin"), images);
  specs::save_table(dir.file("txt.jsonl"), texts);
  spit(dir.file("t.jsonl"),
       "{\"image_id\":\"i\",\"base\":\"a cat\",\"extended\":\"a cat on a mat\",\"polarity\":\"positive\","
       "\"detail_source\":\"i\",\"shuffled\":false,\"depth\":1}\n"
       "{\"image_id\":\"i\",\"base\":\"a cat\",\"extended\":\"a cat in snow\",\"polarity\":\"negative\","
       "\"detail_source\":\"j\",\"shuffled\":false,\"depth\":1}\n");
  auto r = run({"sr", "--triplets", dir.file("t.jsonl"), "--image-emb", dir.file("img.bin"), "--text-emb",
                dir.file("txt.jsonl")});
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["sr_pos"] == 1.0);
  CHECK(j["sr_neg"] == 1.0);

  spit(dir.file("sim.jsonl"),
       "{\"image_id\":\"i\",\"text\":\"a cat\",\"theta\":0.5}\n{\"image_id\":\"i\",\"text\":\"a cat on a mat\",\"theta\":0.4}\n"
       "{\"image_id\":\"i\",\"text\":\"a cat in snow\",\"theta\":0.5}\n");
  r = run({"sr", "--triplets", dir.file("t.jsonl"), "--similarities", dir.file("sim.jsonl")});
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["sr_pos"] == 0.0);
  CHECK(j["sr_neg"] == 0.0);

  spit(dir.file("pairs.jsonl"), "{\"image_id\":\"i\",\"caption_id\":\"a cat in snow\"}\n");
  r = run({"score", "--pairs", dir.file("pairs.jsonl"), "--image-emb", dir.file("img.bin"), "--text-emb",
           dir.file("txt.jsonl")});
  REQUIRE(r.code == 0);
  CHECK(records(r.out)[1]["specs"] == 0.0);
}

TEST_CASE("gradcheck reports a small error") {
  const auto r = run({"gradcheck", "--seed", "2", "--batches", "2", "--batch-size", "4", "--images", "20"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["max_rel_error"].get<double>() < 1e-4);
  CHECK(j["checked"].get<std::size_t>() > 0);
}
