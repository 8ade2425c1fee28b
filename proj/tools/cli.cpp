#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "specs/correlation.hpp"
#include "specs/embedding_store.hpp"
#include "specs/error.hpp"
#include "specs/gradcheck.hpp"
#include "specs/io.hpp"
#include "specs/metrics.hpp"
#include "specs/segment.hpp"
#include "specs/synth.hpp"
#include "specs/toy_model.hpp"
#include "specs/trainer.hpp"
#include "specs/triplets.hpp"

namespace specs::cli {
namespace {

using io::Json;

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << Json{{"error", code}, {"message", message}}.dump() << '\n';
}

// Input or output stream bound to a path; "-" means the standard stream.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") {
      stream_ = &std::cin;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
    stream_ = &file_;
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::Io, "write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::size_t> parse_edges(const std::string& text) {
  std::vector<std::size_t> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item[0] == '-') throw UsageError("bad bucket edge '" + item + "'");
    edges.push_back(static_cast<std::size_t>(v));
  }
  return edges;
}

std::size_t whitespace_tokens(const std::string& text) {
  std::istringstream ss(text);
  std::size_t n = 0;
  for (std::string w; ss >> w;) ++n;
  return n;
}

// Where the similarity between an image and a text comes from.
struct Encoders {
  std::optional<ToyDualEncoder> model;
  EmbeddingTable features;
  EmbeddingTable image_emb;
  EmbeddingTable text_emb;
  std::unordered_map<std::string, Eigen::VectorXd> image_cache;

  const Eigen::VectorXd& image(const std::string& id) {
    auto it = image_cache.find(id);
    if (it == image_cache.end()) {
      it = image_cache.emplace(id, model->encode_image(std::span<const float>(features.at(id)))).first;
    }
    return it->second;
  }

  double theta(const std::string& image_id, const std::string& text, const std::string& text_key) {
    if (model) {
      const Eigen::VectorXd t = model->encode_text(text);
      return std::clamp(image(image_id).dot(t), -1.0, 1.0);
    }
    return cosine(std::span<const float>(image_emb.at(image_id)), std::span<const float>(text_emb.at(text_key)));
  }
};

struct SourceFlags {
  std::string model, features, image_emb, text_emb;

  void add_to(CLI::App& sub) {
    sub.add_option("--model", model, "SPECMDL1 model file");
    sub.add_option("--features", features, "image feature table (with --model)");
    sub.add_option("--image-emb", image_emb, "precomputed image embeddings");
    sub.add_option("--text-emb", text_emb, "precomputed text embeddings");
  }

  bool any() const { return !model.empty() || !image_emb.empty(); }

  Encoders load() const {
    Encoders enc;
    if (!model.empty()) {
      if (features.empty() || !image_emb.empty() || !text_emb.empty()) {
        throw UsageError("--model needs --features and excludes --image-emb/--text-emb");
      }
      enc.model = load_model(model);
      enc.features = load_table(features);
    } else {
      if (image_emb.empty() || text_emb.empty()) throw UsageError("--image-emb and --text-emb go together");
      enc.image_emb = load_table(image_emb);
      enc.text_emb = load_table(text_emb);
      if (enc.image_emb.dim() != enc.text_emb.dim() && !enc.image_emb.empty() && !enc.text_emb.empty()) {
        throw Error(ErrorCode::DimMismatch, "image and text embeddings differ in dimension");
      }
    }
    return enc;
  }

  Json describe() const {
    Json j;
    if (!model.empty()) {
      j["model"] = model;
      j["features"] = features;
    } else {
      j["image_emb"] = image_emb;
      j["text_emb"] = text_emb;
    }
    return j;
  }
};

void check_format(const std::string& format) {
  if (format != "json" && format != "csv") throw UsageError("--format must be json or csv");
}

// ---- segment ---------------------------------------------------------------

struct SegmentCmd {
  std::string input = "-", output = "-";
  bool no_subject = false, no_pps = false, no_leading_pp = false;

  int run(std::uint64_t seed, std::ostream& out) const {
    SegmentOptions opts;
    opts.hold_definite_subject = !no_subject;
    opts.attach_modifier_pps = !no_pps;
    opts.hold_leading_pp = !no_leading_pp;
    Input in(input);
    Output dst(output, out);
    io::write_header(dst.get(), {{"command", "segment"},
                                 {"seed", seed},
                                 {"input", input},
                                 {"hold_definite_subject", opts.hold_definite_subject},
                                 {"attach_modifier_pps", opts.attach_modifier_pps},
                                 {"hold_leading_pp", opts.hold_leading_pp}});
    io::for_each_record(in.get(), [&](const Json& j) {
      io::write_record(dst.get(), io::segmented_to_json(segment(io::caption_input_from_json(j), opts)));
    });
    dst.close();
    return 0;
  }
};

// ---- triplets --------------------------------------------------------------

struct TripletsCmd {
  std::string input = "-", output = "-";
  ForgeConfig cfg;

  int run(std::uint64_t seed, std::ostream& out) {
    cfg.seed = seed;
    cfg.validate();
    Input in(input);
    Output dst(output, out);
    io::write_header(dst.get(), {{"command", "triplets"},
                                 {"seed", seed},
                                 {"input", input},
                                 {"shuffle_rate", cfg.shuffle_rate},
                                 {"pool", cfg.pool_size}});

    // A window is forged once the next one is known to hold at least two
    // captions, so a single trailing caption can still join it.
    std::vector<SegmentedCaption> pending;
    std::uint64_t ordinal = 0;
    std::size_t total = 0;
    auto flush = [&](std::size_t n) {
      std::span<const SegmentedCaption> window(pending.data(), n);
      for (const auto& t : forge_window(window, cfg, ordinal)) io::write_record(dst.get(), io::triplet_to_json(t));
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(n));
      ordinal += n;
    };
    io::for_each_record(in.get(), [&](const Json& j) {
      pending.push_back(io::segmented_from_json(j));
      ++total;
      if (pending.size() == cfg.pool_size + 2) flush(cfg.pool_size);
    });
    if (total < 2) throw Error(ErrorCode::CorpusTooSmall, "need at least two captions");
    flush(pending.size());
    dst.close();
    return 0;
  }
};

// ---- synth -----------------------------------------------------------------

struct SynthCmd {
  std::size_t images = 500, attributes = 16;
  SynthOptions opts;
  std::string features, captions = "-";

  int run(std::uint64_t seed, std::ostream& out) const {
    const SynthCorpus corpus = synth_generate(images, attributes, seed, opts);
    save_table(features, corpus.features);
    Output dst(captions, out);
    io::write_header(dst.get(), {{"command", "synth"},
                                 {"seed", seed},
                                 {"images", images},
                                 {"attributes", attributes},
                                 {"feature_dim", opts.feature_dim},
                                 {"min_attributes", opts.min_attributes},
                                 {"max_attributes", opts.max_attributes},
                                 {"noise", opts.noise},
                                 {"features", features}});
    for (const auto& c : corpus.captions) io::write_record(dst.get(), io::segmented_to_json(c));
    dst.close();
    return 0;
  }
};

// ---- train -----------------------------------------------------------------

struct TrainCmd {
  std::string triplets, features, model_out = "model.bin", log_out = "train_log.csv", config;
  std::map<std::string, std::string> overrides;

  int run(std::uint64_t seed, bool seed_given, std::ostream& out) const {
    TrainConfig cfg;
    LossWeights weights;
    cfg.seed = seed;
    if (!config.empty()) {
      std::ifstream f(config);
      if (!f) throw Error(ErrorCode::Io, "cannot open '" + config + "' for reading");
      std::stringstream text;
      text << f.rdbuf();
      apply_config_text(text.str(), cfg, weights);
      if (seed_given) cfg.seed = seed;
    }
    std::string lines;
    for (const auto& [key, value] : overrides) lines += key + " = " + value + "\n";
    apply_config_text(lines, cfg, weights);
    weights.validate();
    cfg.validate();

    std::vector<Triplet> trips;
    {
      Input in(triplets);
      trips = io::read_triplets(in.get());
    }
    const EmbeddingTable feats = load_table(features);
    const TrainingData data = assemble_training_data(trips, feats, cfg.heldout_fraction, cfg.seed);
    const TrainResult result = train(data, cfg, weights);
    save_model(model_out, result.model);

    const std::string described = describe_config(cfg, weights);
    Output log(log_out, out);
    log.get() << "# config " << described << '\n' << log_to_csv(result.log);
    log.close();

    Json summary = {{"_header", Json::parse(described)},
                    {"model", model_out},
                    {"log", log_out},
                    {"train_examples", data.train.size()},
                    {"heldout_triplets", data.heldout_triplets.size()},
                    {"epochs", result.log.size()}};
    if (!result.log.empty()) summary["heldout"] = io::report_to_json(result.log.back().heldout);
    out << summary.dump() << '\n';
    return 0;
  }
};

// ---- sr --------------------------------------------------------------------

struct SrCmd {
  std::string triplets, similarities, output = "-", format = "json";
  SourceFlags source;

  int run(std::uint64_t seed, std::ostream& out) const {
    check_format(format);
    if (source.any() == !similarities.empty()) {
      throw UsageError("give exactly one of --model, --image-emb/--text-emb or --similarities");
    }
    std::vector<Triplet> trips;
    {
      Input in(triplets);
      trips = io::read_triplets(in.get());
    }

    Json header = {{"command", "sr"}, {"seed", seed}, {"triplets", triplets}};
    std::vector<ScoredTriplet> scored;
    if (!similarities.empty()) {
      header["similarities"] = similarities;
      SimilarityTable table;
      Input in(similarities);
      io::for_each_record(in.get(), [&](const Json& j) {
        table.add(j.at("image_id").get<std::string>(), j.at("text").get<std::string>(), j.at("theta").get<double>());
      });
      scored = score_triplets(trips, [&](const std::string& image, const std::string& text) {
        return table.at(image, text);
      });
    } else {
      header.update(source.describe());
      Encoders enc = source.load();
      scored = score_triplets(trips, [&](const std::string& image, const std::string& text) {
        return enc.theta(image, text, text);
      });
    }
    const SpecificityReport report = specificity_rate(scored);

    Output dst(output, out);
    if (format == "json") {
      Json j = {{"_header", header}};
      j.update(io::report_to_json(report));
      dst.get() << j.dump() << '\n';
    } else {
      dst.get() << "# config " << header.dump() << "\nsr_pos,sr_neg,average,n_pos,n_neg\n"
                << num(report.sr_pos) << ',' << num(report.sr_neg) << ',' << num(report.average) << ','
                << report.n_pos << ',' << report.n_neg << '\n';
    }
    dst.close();
    return 0;
  }
};

// ---- score -----------------------------------------------------------------

struct ScoreCmd {
  std::string pairs, output = "-", format = "json";
  SourceFlags source;

  int run(std::uint64_t seed, std::ostream& out) const {
    check_format(format);
    if (!source.any()) throw UsageError("score needs --model/--features or --image-emb/--text-emb");
    Encoders enc = source.load();
    Json header = {{"command", "score"}, {"seed", seed}, {"pairs", pairs}};
    header.update(source.describe());

    Input in(pairs);
    Output dst(output, out);
    if (format == "json") {
      io::write_header(dst.get(), header);
    } else {
      dst.get() << "# config " << header.dump() << "\nimage_id,caption_id,specs,token_count\n";
    }
    io::for_each_record(in.get(), [&](const Json& j) {
      const std::string image_id = j.at("image_id").get<std::string>();
      const std::string caption_id = j.at("caption_id").get<std::string>();
      const std::string caption = j.value("caption", std::string{});
      if (enc.model && caption.empty()) {
        throw Error(ErrorCode::DataMissing, "pair '" + caption_id + "' has no caption text to encode");
      }
      const double theta = enc.theta(image_id, caption, caption_id);
      const ScoredPair pair{image_id, caption_id, std::max(0.0, theta)};
      const std::size_t tokens = j.contains("token_count") ? j.at("token_count").get<std::size_t>()
                                                          : std::max<std::size_t>(1, whitespace_tokens(caption));
      if (format == "json") {
        Json rec = io::scored_pair_to_json(pair);
        rec["token_count"] = tokens;
        io::write_record(dst.get(), rec);
      } else {
        dst.get() << csv_field(pair.image_id) << ',' << csv_field(pair.caption_id) << ',' << num(pair.specs) << ','
                  << tokens << '\n';
      }
    });
    dst.close();
    return 0;
  }
};

// ---- correlate -------------------------------------------------------------

struct CorrelateCmd {
  std::string scores, human, buckets, output = "-", format = "json", plot_csv;
  bool per_image = false;

  std::vector<JudgedSample> join() const {
    std::map<std::pair<std::string, std::string>, Json> judged;
    {
      Input in(human);
      io::for_each_record(in.get(), [&](const Json& j) {
        judged[{j.at("image_id").get<std::string>(), j.at("caption_id").get<std::string>()}] = j;
      });
    }
    std::vector<JudgedSample> samples;
    Input in(scores);
    io::for_each_record(in.get(), [&](const Json& j) {
      JudgedSample s;
      s.image_id = j.at("image_id").get<std::string>();
      s.caption_id = j.at("caption_id").get<std::string>();
      s.metric_score = j.at("specs").get<double>();
      const auto it = judged.find({s.image_id, s.caption_id});
      if (it == judged.end()) {
        throw Error(ErrorCode::DataMissing, "no human score for (" + s.image_id + ", " + s.caption_id + ")");
      }
      s.human_score = it->second.at("human_score").get<double>();
      if (j.contains("token_count")) {
        s.token_count = j.at("token_count").get<std::size_t>();
      } else if (it->second.contains("token_count")) {
        s.token_count = it->second.at("token_count").get<std::size_t>();
      }
      if (s.token_count < 1) throw Error(ErrorCode::DataMissing, "token_count must be at least 1");
      samples.push_back(std::move(s));
    });
    return samples;
  }

  int run(std::uint64_t seed, bool buckets_given, std::ostream& out) const {
    check_format(format);
    const std::vector<std::size_t> edges = parse_edges(buckets);
    const std::vector<JudgedSample> samples = join();
    const CorrelationReport pooled = correlate(samples);
    std::optional<double> sample_wise;
    if (per_image) sample_wise = sample_wise_kendall(samples);
    std::vector<BucketResult> bucketed;
    if (buckets_given) bucketed = bucketed_correlate(samples, edges);

    Json header = {{"command", "correlate"}, {"seed", seed}, {"scores", scores}, {"human", human},
                   {"per_image", per_image}};
    if (buckets_given) header["buckets"] = edges;

    Output dst(output, out);
    if (format == "json") {
      Json j = {{"_header", header}, {"pooled", io::correlation_to_json(pooled)}};
      if (sample_wise) j["sample_wise_kendall"] = *sample_wise;
      if (buckets_given) {
        Json arr = Json::array();
        for (const auto& b : bucketed) {
          Json e = {{"lo", b.bucket.lo}, {"hi", b.bucket.hi ? Json(*b.bucket.hi) : Json(nullptr)}, {"n", b.n}};
          if (b.report) {
            e["report"] = io::correlation_to_json(*b.report);
          } else {
            e["skipped"] = b.skipped_reason;
          }
          arr.push_back(e);
        }
        j["buckets"] = arr;
      }
      dst.get() << j.dump() << '\n';
    } else {
      auto& o = dst.get();
      o << "# config " << header.dump() << "\nscope,lo,hi,n,pcc,one_minus_r2,one_minus_r2_ols,kendall_tau,spearman,skipped\n";
      auto row = [&](const std::string& scope, const std::string& lo, const std::string& hi, std::size_t n,
                     const CorrelationReport* r, const std::string& skipped) {
        o << scope << ',' << lo << ',' << hi << ',' << n;
        if (r) {
          o << ',' << num(r->pcc) << ',' << num(r->one_minus_r2) << ',' << num(r->one_minus_r2_ols) << ','
            << num(r->kendall_tau) << ',' << num(r->spearman) << ",\n";
        } else {
          o << ",,,,," << csv_field(skipped) << '\n';
        }
      };
      row("pooled", "", "", pooled.n, &pooled, "");
      for (const auto& b : bucketed) {
        row("bucket", std::to_string(b.bucket.lo), b.bucket.hi ? std::to_string(*b.bucket.hi) : "", b.n,
            b.report ? &*b.report : nullptr, b.skipped_reason);
      }
      if (sample_wise) o << "# sample_wise_kendall " << num(*sample_wise) << '\n';
    }
    dst.close();

    if (!plot_csv.empty()) {
      Output plot(plot_csv, out);
      plot.get() << "image_id,caption_id,token_count,metric_score,human_score\n";
      for (const auto& s : samples) {
        plot.get() << csv_field(s.image_id) << ',' << csv_field(s.caption_id) << ',' << s.token_count << ','
                   << num(s.metric_score) << ',' << num(s.human_score) << '\n';
      }
      plot.close();
    }
    return 0;
  }
};

// ---- gradcheck -------------------------------------------------------------

struct GradcheckCmd {
  std::size_t batches = 20, batch_size = 8, images = 60, attributes = 16;
  double h = 1e-5;
  std::string model;

  int run(std::uint64_t seed, std::ostream& out) const {
    if (batches == 0 || batch_size < 2) throw UsageError("need --batches >= 1 and --batch-size >= 2");
    const SynthCorpus corpus = synth_generate(images, attributes, seed);
    ForgeConfig fc;
    fc.seed = seed;
    fc.pool_size = images;
    const auto trips = forge(corpus.captions, fc);
    const TrainingData data = assemble_training_data(trips, corpus.features, 0.0, seed);

    TrainConfig cfg;
    cfg.seed = seed;
    const ToyDualEncoder m = model.empty() ? ToyDualEncoder::initialize(cfg.dims, seed, cfg.init_scale) : load_model(model);

    Rng rng(derive_seed(seed, "gradcheck", 0));
    GradCheckResult worst;
    std::size_t done = 0;
    std::vector<TrainingExample> batch;
    while (done < batches) {
      for (const auto& indices : make_batches(data.train, batch_size, rng)) {
        if (indices.size() < 2 || done == batches) continue;
        batch.clear();
        for (std::size_t i : indices) batch.push_back(data.train[i]);
        const GradCheckResult r = gradient_check(m, batch, LossWeights{}, cfg, h);
        worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
        worst.checked += r.checked;
        worst.flagged += r.flagged;
        worst.untouched += r.untouched;
        ++done;
      }
    }
    out << Json{{"_header",
                 {{"command", "gradcheck"},
                  {"seed", seed},
                  {"batches", batches},
                  {"batch_size", batch_size},
                  {"images", images},
                  {"attributes", attributes},
                  {"h", h},
                  {"model", model.empty() ? Json(nullptr) : Json(model)}}},
                {"max_rel_error", worst.max_rel_error},
                {"checked", worst.checked},
                {"flagged", worst.flagged},
                {"untouched", worst.untouched}}
               .dump()
        << '\n';
    return 0;
  }
};

bool is_usage(ErrorCode code) { return code == ErrorCode::BadConfig || code == ErrorCode::BadEdges; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Specificity evaluation toolkit for long image captions", "specs"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all");

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    return sub->add_option("--seed", seed, "random seed")->envname("SPECS_SEED")->capture_default_str();
  };

  SegmentCmd seg;
  auto* s_seg = app.add_subcommand("segment", "split captions into detail units");
  s_seg->add_option("-i,--input", seg.input, "caption JSONL, - for stdin")->capture_default_str();
  s_seg->add_option("-o,--output", seg.output, "segmentation JSONL, - for stdout")->capture_default_str();
  s_seg->add_flag("--no-hold-subject", seg.no_subject, "split after a sentence-initial 'The' NP");
  s_seg->add_flag("--no-attach-pps", seg.no_pps, "split before every modifier PP");
  s_seg->add_flag("--no-hold-leading-pp", seg.no_leading_pp, "keep verbless preposition-led units");
  add_seed(s_seg);

  TripletsCmd trip;
  auto* s_trip = app.add_subcommand("triplets", "forge positive and negative minimal pairs");
  s_trip->add_option("-i,--input", trip.input, "segmentation JSONL")->capture_default_str();
  s_trip->add_option("-o,--output", trip.output, "triplet JSONL")->capture_default_str();
  s_trip->add_option("--shuffle-rate", trip.cfg.shuffle_rate)->capture_default_str();
  s_trip->add_option("--pool", trip.cfg.pool_size)->capture_default_str();
  add_seed(s_trip);

  SynthCmd syn;
  auto* s_syn = app.add_subcommand("synth", "generate a planted-attribute corpus");
  s_syn->add_option("--images", syn.images)->capture_default_str();
  s_syn->add_option("--attributes", syn.attributes)->capture_default_str();
  s_syn->add_option("--noise", syn.opts.noise)->capture_default_str();
  s_syn->add_option("--min-attributes", syn.opts.min_attributes)->capture_default_str();
  s_syn->add_option("--max-attributes", syn.opts.max_attributes)->capture_default_str();
  s_syn->add_option("--features", syn.features, "feature table (.bin or .jsonl)")->required();
  s_syn->add_option("--captions", syn.captions, "segmentation JSONL")->capture_default_str();
  add_seed(s_syn);

  TrainCmd tr;
  std::map<std::string, std::string> train_flags;
  auto* s_tr = app.add_subcommand("train", "train the toy dual encoder");
  s_tr->add_option("--triplets", tr.triplets)->required();
  s_tr->add_option("--features", tr.features)->required();
  s_tr->add_option("--model", tr.model_out, "output model")->capture_default_str();
  s_tr->add_option("--log", tr.log_out, "output CSV log")->capture_default_str();
  s_tr->add_option("--config", tr.config, "key = value config file");
  for (const char* key : {"epochs", "learning_rate", "batch_size", "alpha", "beta", "gamma", "margin",
                          "temperature", "weight_decay", "heldout_fraction", "phases"}) {
    std::string flag = std::string("--") + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    s_tr->add_option(flag, train_flags[key]);
  }
  auto* tr_seed = add_seed(s_tr);

  SrCmd sr;
  auto* s_sr = app.add_subcommand("sr", "specificity rate over a triplet file");
  s_sr->add_option("--triplets", sr.triplets)->required();
  s_sr->add_option("--similarities", sr.similarities, "JSONL of {image_id, text, theta}");
  sr.source.add_to(*s_sr);
  s_sr->add_option("-o,--output", sr.output)->capture_default_str();
  s_sr->add_option("--format", sr.format, "json or csv")->capture_default_str();
  add_seed(s_sr);

  ScoreCmd sc;
  auto* s_sc = app.add_subcommand("score", "clipped-cosine scores for image/caption pairs");
  s_sc->add_option("--pairs", sc.pairs, "JSONL of {image_id, caption_id, caption}")->required();
  sc.source.add_to(*s_sc);
  s_sc->add_option("-o,--output", sc.output)->capture_default_str();
  s_sc->add_option("--format", sc.format, "json or csv")->capture_default_str();
  add_seed(s_sc);

  CorrelateCmd co;
  auto* s_co = app.add_subcommand("correlate", "agreement between metric scores and human judgments");
  s_co->add_option("--scores", co.scores)->required();
  s_co->add_option("--human", co.human)->required();
  auto* co_buckets = s_co->add_option("--buckets", co.buckets, "comma-separated token-count edges");
  s_co->add_flag("--per-image", co.per_image, "also report mean within-image Kendall tau");
  s_co->add_option("-o,--output", co.output)->capture_default_str();
  s_co->add_option("--format", co.format, "json or csv")->capture_default_str();
  s_co->add_option("--plot-csv", co.plot_csv, "aligned per-sample CSV");
  add_seed(s_co);

  GradcheckCmd gc;
  auto* s_gc = app.add_subcommand("gradcheck", "finite-difference check of the training gradient");
  s_gc->add_option("--batches", gc.batches)->capture_default_str();
  s_gc->add_option("--batch-size", gc.batch_size)->capture_default_str();
  s_gc->add_option("--images", gc.images)->capture_default_str();
  s_gc->add_option("--attributes", gc.attributes)->capture_default_str();
  s_gc->add_option("--step", gc.h, "finite-difference step")->capture_default_str();
  s_gc->add_option("--model", gc.model, "check at these parameters instead of a fresh init");
  add_seed(s_gc);

  std::vector<std::string> argv_store{"specs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "Usage", e.what());
    return kUsageError;
  }

  try {
    if (s_seg->parsed()) return seg.run(seed, out);
    if (s_trip->parsed()) return trip.run(seed, out);
    if (s_syn->parsed()) return syn.run(seed, out);
    if (s_tr->parsed()) {
      for (const auto& [key, value] : train_flags) {
        if (!value.empty()) tr.overrides[key] = value;
      }
      return tr.run(seed, tr_seed->count() > 0 || std::getenv("SPECS_SEED") != nullptr, out);
    }
    if (s_sr->parsed()) return sr.run(seed, out);
    if (s_sc->parsed()) return sc.run(seed, out);
    if (s_co->parsed()) return co.run(seed, co_buckets->count() > 0, out);
    if (s_gc->parsed()) return gc.run(seed, out);
  } catch (const UsageError& e) {
    report_error(err, "Usage", e.what());
    return kUsageError;
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return is_usage(e.code()) ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what());
    return kDataError;
  }
  return kUsageError;
}

}  // namespace specs::cli
