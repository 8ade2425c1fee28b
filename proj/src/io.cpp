#include "specs/io.hpp"

#include "specs/error.hpp"

namespace specs::io {

void for_each_record(std::istream& in, const std::function<void(const Json&)>& fn) {
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::DataMissing, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.is_object() && j.contains("_header")) continue;
    try {
      fn(j);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::DataMissing, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void write_header(std::ostream& out, const Json& config) { out << Json{{"_header", config}}.dump() << '\n'; }

void write_record(std::ostream& out, const Json& record) { out << record.dump() << '\n'; }

CaptionInput caption_input_from_json(const Json& j) {
  CaptionInput in;
  in.image_id = j.at("image_id").get<std::string>();
  in.caption = j.at("caption").get<std::string>();
  if (j.contains("tokens") && !j.at("tokens").is_null()) {
    std::vector<ExternalToken> tokens;
    for (const auto& t : j.at("tokens")) tokens.push_back({t.at("text").get<std::string>(), t.at("pos").get<std::string>()});
    in.tokens = std::move(tokens);
  }
  return in;
}

Json segmented_to_json(const SegmentedCaption& seg) {
  return {{"image_id", seg.image_id}, {"caption", seg.source}, {"units", seg.unit_texts()}};
}

SegmentedCaption segmented_from_json(const Json& j) {
  SegmentedCaption seg;
  seg.image_id = j.at("image_id").get<std::string>();
  seg.source = j.at("caption").get<std::string>();
  std::size_t index = 0;
  for (const auto& u : j.at("units")) seg.units.push_back({u.get<std::string>(), {}, ++index});
  if (seg.units.empty()) throw Error(ErrorCode::DataMissing, "caption '" + seg.image_id + "' has no units");
  return seg;
}

Json triplet_to_json(const Triplet& t) {
  return {{"image_id", t.image_id},
          {"base", t.base.text},
          {"extended", t.extended},
          {"polarity", t.polarity == Polarity::Positive ? "positive" : "negative"},
          {"detail_source", t.detail_source},
          {"shuffled", t.shuffled},
          {"depth", t.base.depth}};
}

Triplet triplet_from_json(const Json& j) {
  Triplet t;
  t.image_id = j.at("image_id").get<std::string>();
  t.base = {t.image_id, j.at("base").get<std::string>(), j.at("depth").get<std::size_t>()};
  t.extended = j.at("extended").get<std::string>();
  const auto polarity = j.at("polarity").get<std::string>();
  if (polarity != "positive" && polarity != "negative") {
    throw Error(ErrorCode::DataMissing, "polarity must be 'positive' or 'negative', got '" + polarity + "'");
  }
  t.polarity = polarity == "positive" ? Polarity::Positive : Polarity::Negative;
  t.detail_source = j.value("detail_source", t.image_id);
  t.shuffled = j.value("shuffled", false);
  return t;
}

Json report_to_json(const SpecificityReport& r) {
  return {{"sr_pos", r.sr_pos}, {"sr_neg", r.sr_neg}, {"average", r.average}, {"n_pos", r.n_pos}, {"n_neg", r.n_neg}};
}

Json scored_pair_to_json(const ScoredPair& p) {
  return {{"image_id", p.image_id}, {"caption_id", p.caption_id}, {"specs", p.specs}};
}

ScoredPair scored_pair_from_json(const Json& j) {
  return {j.at("image_id").get<std::string>(), j.at("caption_id").get<std::string>(), j.at("specs").get<double>()};
}

Json correlation_to_json(const CorrelationReport& r) {
  Json j = {{"n", r.n},
            {"pcc", r.pcc},
            {"one_minus_r2", r.one_minus_r2},
            {"one_minus_r2_ols", r.one_minus_r2_ols},
            {"kendall_tau", r.kendall_tau},
            {"spearman", r.spearman}};
  if (r.bucket) {
    j["bucket"] = {{"lo", r.bucket->lo}, {"hi", r.bucket->hi ? Json(*r.bucket->hi) : Json(nullptr)}};
  }
  return j;
}

std::vector<Triplet> read_triplets(std::istream& in) {
  std::vector<Triplet> out;
  for_each_record(in, [&](const Json& j) { out.push_back(triplet_from_json(j)); });
  return out;
}

std::vector<SegmentedCaption> read_segmented(std::istream& in) {
  std::vector<SegmentedCaption> out;
  for_each_record(in, [&](const Json& j) { out.push_back(segmented_from_json(j)); });
  return out;
}

}  // namespace specs::io
