#include "specs/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "specs/error.hpp"
#include "specs/rng.hpp"

namespace specs {

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw Error(ErrorCode::BadConfig, "loss weights must be non-negative");
  if (alpha == 0 && beta == 0 && gamma == 0) throw Error(ErrorCode::BadConfig, "loss weights are all zero");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw Error(ErrorCode::BadConfig, "learning_rate must be positive");
  if (!(temperature > 0)) throw Error(ErrorCode::BadConfig, "temperature must be positive");
  if (weight_decay < 0) throw Error(ErrorCode::BadConfig, "weight_decay must be non-negative");
  if (batch_size < 2) throw Error(ErrorCode::BadConfig, "batch_size must be at least 2");
  if (!(heldout_fraction >= 0 && heldout_fraction < 1)) {
    throw Error(ErrorCode::BadConfig, "heldout_fraction must lie in [0, 1)");
  }
  if (!margin.dynamic && !(margin.fixed_value >= 0)) throw Error(ErrorCode::BadConfig, "fixed margin must be >= 0");
  for (const auto& p : phases) p.weights.validate();
}

TrainingData assemble_training_data(std::span<const Triplet> triplets, const EmbeddingTable& features,
                                    double heldout_fraction, std::uint64_t seed) {
  std::vector<std::string> images;
  std::set<std::string> seen;
  std::map<std::pair<std::string, std::size_t>, const Triplet*> positives, negatives;
  std::map<std::string, const Triplet*> deepest;
  for (const auto& t : triplets) {
    if (seen.insert(t.image_id).second) images.push_back(t.image_id);
    const auto key = std::make_pair(t.image_id, t.base.depth);
    auto& slot = t.polarity == Polarity::Positive ? positives : negatives;
    slot.emplace(key, &t);
    if (t.polarity == Polarity::Positive) {
      auto& d = deepest[t.image_id];
      if (d == nullptr || t.base.depth > d->base.depth) d = &t;
    }
  }

  Rng rng(derive_seed(seed, "heldout"));
  std::vector<std::string> shuffled = images;
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  const auto n_heldout = static_cast<std::size_t>(std::floor(heldout_fraction * static_cast<double>(images.size()) + 0.5));
  const std::set<std::string> heldout(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_heldout));

  TrainingData data;
  data.features = features;
  for (const auto& t : triplets) {
    if (heldout.contains(t.image_id)) data.heldout_triplets.push_back(t);
  }
  for (const auto& image : images) {
    if (!features.find(image)) throw Error(ErrorCode::DataMissing, "no image features for '" + image + "'");
    if (heldout.contains(image) || !deepest.contains(image)) continue;
    const auto& feat = features.at(image);
    const std::string& caption = deepest.at(image)->extended;
    for (auto it = positives.lower_bound({image, 0}); it != positives.end() && it->first.first == image; ++it) {
      auto neg = negatives.find(it->first);
      if (neg == negatives.end()) continue;
      TrainingExample ex;
      ex.image_id = image;
      ex.features.assign(feat.begin(), feat.end());
      ex.caption = caption;
      ex.base = it->second->base.text;
      ex.positive = it->second->extended;
      ex.negative = neg->second->extended;
      data.train.push_back(std::move(ex));
    }
  }
  if (data.train.empty()) throw Error(ErrorCode::DataMissing, "no positive/negative triplet pairs to train on");
  return data;
}

namespace {

struct TextForward {
  std::vector<std::size_t> ids;
  Eigen::VectorXd unit;
  double norm = 0.0;
};

TextForward forward_text(const ToyDualEncoder& model, const std::string& text) {
  TextForward f;
  f.ids = model.token_ids(text);
  if (f.ids.empty()) throw Error(ErrorCode::ZeroVector, "text has no tokens");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.token_table.cols());
  for (std::size_t id : f.ids) sum += model.token_table.row(static_cast<Eigen::Index>(id)).transpose();
  sum /= static_cast<double>(f.ids.size());
  f.norm = sum.norm();
  if (!(f.norm > 0.0)) throw Error(ErrorCode::ZeroVector, "text encodes to a zero vector");
  f.unit = sum / f.norm;
  return f;
}

void backprop_text(const TextForward& f, const Eigen::VectorXd& d_unit, Eigen::MatrixXd& d_table) {
  const Eigen::VectorXd d_sum = (d_unit - f.unit * f.unit.dot(d_unit)) / f.norm;
  const double share = 1.0 / static_cast<double>(f.ids.size());
  for (std::size_t id : f.ids) d_table.row(static_cast<Eigen::Index>(id)) += share * d_sum.transpose();
}

}  // namespace

BatchEvaluation evaluate_batch(const ToyDualEncoder& model, std::span<const TrainingExample> batch,
                               const LossWeights& weights, const TrainConfig& cfg, Gradients* grad,
                               std::optional<std::pair<double, double>> frozen_margins) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "empty training batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index dim = model.image_proj.cols();
  const auto feature_dim = static_cast<std::size_t>(model.image_proj.rows());

  Eigen::MatrixXd features(b, model.image_proj.rows());
  Eigen::MatrixXd image(b, dim);
  std::vector<double> image_norm(batch.size());
  Eigen::MatrixXd caption(b, dim);
  std::vector<TextForward> cap_f, base_f, pos_f, neg_f;
  std::vector<SimilarityPair> pos_pairs, neg_pairs;
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto& ex = batch[static_cast<std::size_t>(k)];
    if (ex.features.size() != feature_dim) {
      throw Error(ErrorCode::DimMismatch, "example '" + ex.image_id + "' has the wrong feature width");
    }
    for (Eigen::Index d = 0; d < features.cols(); ++d) features(k, d) = ex.features[static_cast<std::size_t>(d)];
    const Eigen::VectorXd raw = model.image_proj.transpose() * features.row(k).transpose();
    image_norm[static_cast<std::size_t>(k)] = raw.norm();
    if (!(image_norm[static_cast<std::size_t>(k)] > 0.0)) {
      throw Error(ErrorCode::ZeroVector, "image '" + ex.image_id + "' encodes to a zero vector");
    }
    image.row(k) = raw.transpose() / image_norm[static_cast<std::size_t>(k)];
    cap_f.push_back(forward_text(model, ex.caption));
    base_f.push_back(forward_text(model, ex.base));
    pos_f.push_back(forward_text(model, ex.positive));
    neg_f.push_back(forward_text(model, ex.negative));
    caption.row(k) = cap_f.back().unit.transpose();
    const Eigen::VectorXd v = image.row(k).transpose();
    const double theta_base = v.dot(base_f.back().unit);
    pos_pairs.push_back({theta_base, v.dot(pos_f.back().unit)});
    neg_pairs.push_back({theta_base, v.dot(neg_f.back().unit)});
  }

  const HingeResult pos = positive_hinge_loss(
      pos_pairs, cfg.margin, frozen_margins ? std::optional<double>(frozen_margins->first) : std::nullopt);
  const HingeResult neg = negative_hinge_loss(
      neg_pairs, cfg.margin, frozen_margins ? std::optional<double>(frozen_margins->second) : std::nullopt);

  std::optional<ContrastiveResult> con;
  if (b >= 2) {
    con = contrastive_loss(image, caption, cfg.temperature);
  } else if (weights.alpha > 0) {
    throw Error(ErrorCode::BatchTooSmall, "contrastive term needs at least two examples");
  }

  BatchEvaluation out;
  out.loss.contrastive = con ? con->loss : 0.0;
  out.loss.pos = pos.loss;
  out.loss.neg = neg.loss;
  out.loss.epsilon_pos = pos.epsilon;
  out.loss.epsilon_neg = neg.epsilon;
  out.loss.total = weights.alpha * out.loss.contrastive + weights.beta * pos.loss + weights.gamma * neg.loss;
  out.pattern = {pos.active, neg.active};

  if (grad == nullptr) return out;
  grad->image_proj = Eigen::MatrixXd::Zero(model.image_proj.rows(), model.image_proj.cols());
  grad->token_table = Eigen::MatrixXd::Zero(model.token_table.rows(), model.token_table.cols());

  for (Eigen::Index k = 0; k < b; ++k) {
    const auto s = static_cast<std::size_t>(k);
    const Eigen::VectorXd v = image.row(k).transpose();
    const double g_base = weights.beta * pos.d_base[s] + weights.gamma * neg.d_base[s];
    const double g_pos = weights.beta * pos.d_extended[s];
    const double g_neg = weights.gamma * neg.d_extended[s];

    Eigen::VectorXd d_image = g_base * base_f[s].unit + g_pos * pos_f[s].unit + g_neg * neg_f[s].unit;
    if (con && weights.alpha != 0.0) {
      d_image += weights.alpha * con->d_image.row(k).transpose();
      backprop_text(cap_f[s], weights.alpha * con->d_text.row(k).transpose(), grad->token_table);
    }
    if (g_base != 0.0) backprop_text(base_f[s], g_base * v, grad->token_table);
    if (g_pos != 0.0) backprop_text(pos_f[s], g_pos * v, grad->token_table);
    if (g_neg != 0.0) backprop_text(neg_f[s], g_neg * v, grad->token_table);

    const Eigen::VectorXd d_raw = (d_image - v * v.dot(d_image)) / image_norm[s];
    grad->image_proj += features.row(k).transpose() * d_raw.transpose();
  }
  return out;
}

SpecificityReport evaluate_specificity(const ToyDualEncoder& model, std::span<const Triplet> triplets,
                                       const EmbeddingTable& features) {
  std::unordered_map<std::string, Eigen::VectorXd> images, texts;
  auto theta = [&](const std::string& image_id, const std::string& text) {
    auto img = images.find(image_id);
    if (img == images.end()) img = images.emplace(image_id, model.encode_image(features.at(image_id))).first;
    auto txt = texts.find(text);
    if (txt == texts.end()) txt = texts.emplace(text, model.encode_text(text)).first;
    return img->second.dot(txt->second);
  };
  const auto scored = score_triplets(triplets, theta);
  return specificity_rate(scored);
}

namespace {

struct AdamState {
  Eigen::MatrixXd m, v;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adamw_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& g, AdamState& s, double lr, double wd,
                std::uint64_t t) {
  s.m = kBeta1 * s.m + (1.0 - kBeta1) * g;
  s.v = kBeta2 * s.v + (1.0 - kBeta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
  param *= (1.0 - lr * wd);
  param.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + kAdamEps);
}

}  // namespace

std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainingExample> examples,
                                                   std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> pending(examples.size());
  std::iota(pending.begin(), pending.end(), 0);
  for (std::size_t i = pending.size(); i > 1; --i) std::swap(pending[i - 1], pending[rng.below(i)]);

  std::vector<std::vector<std::size_t>> batches;
  while (!pending.empty()) {
    std::vector<std::size_t> batch, rest;
    std::set<std::string_view> images;
    for (std::size_t idx : pending) {
      if (batch.size() < batch_size && images.insert(examples[idx].image_id).second) {
        batch.push_back(idx);
      } else {
        rest.push_back(idx);
      }
    }
    batches.push_back(std::move(batch));
    pending = std::move(rest);
  }
  return batches;
}

TrainResult train(const TrainingData& data, const TrainConfig& cfg, const LossWeights& weights) {
  cfg.validate();
  std::vector<TrainPhase> phases = cfg.phases;
  if (phases.empty()) {
    weights.validate();
    phases.push_back({cfg.epochs, weights});
  }
  if (data.train.empty()) throw Error(ErrorCode::DataMissing, "no training examples");

  TrainResult result{ToyDualEncoder::initialize(cfg.dims, cfg.seed, cfg.init_scale), {}};
  ToyDualEncoder& model = result.model;
  if (data.train.front().features.size() != cfg.dims.feature_dim) {
    throw Error(ErrorCode::DimMismatch, "image features have " + std::to_string(data.train.front().features.size()) +
                                            " components, config expects " + std::to_string(cfg.dims.feature_dim));
  }
  AdamState s_img{Eigen::MatrixXd::Zero(model.image_proj.rows(), model.image_proj.cols()),
                  Eigen::MatrixXd::Zero(model.image_proj.rows(), model.image_proj.cols())};
  AdamState s_tok{Eigen::MatrixXd::Zero(model.token_table.rows(), model.token_table.cols()),
                  Eigen::MatrixXd::Zero(model.token_table.rows(), model.token_table.cols())};

  std::uint64_t step = 0;
  std::size_t epoch = 0;
  Gradients grad;
  std::vector<TrainingExample> batch;
  for (const auto& phase : phases) {
    for (std::size_t e = 0; e < phase.epochs; ++e) {
      ++epoch;
      Rng rng(derive_seed(cfg.seed, "epoch", epoch));
      LossBreakdown sum;
      std::size_t counted = 0;
      for (const auto& indices : make_batches(data.train, cfg.batch_size, rng)) {
        if (indices.size() < 2) continue;
        batch.clear();
        for (std::size_t idx : indices) batch.push_back(data.train[idx]);
        const auto eval = evaluate_batch(model, batch, phase.weights, cfg, &grad);
        if (!std::isfinite(eval.loss.total) || !grad.image_proj.allFinite() || !grad.token_table.allFinite()) {
          throw Error(ErrorCode::NonFiniteLoss, "non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                                    ", step " + std::to_string(step + 1));
        }
        ++step;
        adamw_step(model.image_proj, grad.image_proj, s_img, cfg.learning_rate, cfg.weight_decay, step);
        adamw_step(model.token_table, grad.token_table, s_tok, cfg.learning_rate, cfg.weight_decay, step);
        sum.contrastive += eval.loss.contrastive;
        sum.pos += eval.loss.pos;
        sum.neg += eval.loss.neg;
        sum.total += eval.loss.total;
        sum.epsilon_pos += eval.loss.epsilon_pos;
        sum.epsilon_neg += eval.loss.epsilon_neg;
        ++counted;
      }
      if (!model.all_finite()) {
        throw Error(ErrorCode::NonFiniteLoss, "parameters became non-finite in epoch " + std::to_string(epoch));
      }
      EpochLog entry;
      entry.epoch = epoch;
      if (counted > 0) {
        const double c = static_cast<double>(counted);
        entry.loss = {sum.contrastive / c, sum.pos / c, sum.neg / c, sum.total / c, sum.epsilon_pos / c,
                      sum.epsilon_neg / c};
      }
      if (!data.heldout_triplets.empty()) {
        entry.heldout = evaluate_specificity(model, data.heldout_triplets, data.features);
      }
      result.log.push_back(entry);
    }
  }
  return result;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "'" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

LossWeights parse_weights(const std::string& key, const std::string& v) {
  std::stringstream in(v);
  std::string a, b, c;
  if (!std::getline(in, a, ',') || !std::getline(in, b, ',') || !std::getline(in, c, ',')) {
    throw Error(ErrorCode::BadConfig, "'" + key + "' expects alpha,beta,gamma");
  }
  return {to_double(key, trim(a)), to_double(key, trim(b)), to_double(key, trim(c))};
}

}  // namespace

void apply_config_text(const std::string& text, TrainConfig& cfg, LossWeights& weights) {
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "alpha") weights.alpha = to_double(key, value);
    else if (key == "beta") weights.beta = to_double(key, value);
    else if (key == "gamma") weights.gamma = to_double(key, value);
    else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = to_double(key, value);
    else if (key == "batch_size") cfg.batch_size = to_uint(key, value);
    else if (key == "epochs") cfg.epochs = to_uint(key, value);
    else if (key == "temperature") cfg.temperature = to_double(key, value);
    else if (key == "seed") cfg.seed = to_uint(key, value);
    else if (key == "heldout_fraction") cfg.heldout_fraction = to_double(key, value);
    else if (key == "init_scale") cfg.init_scale = to_double(key, value);
    else if (key == "feature_dim") cfg.dims.feature_dim = to_uint(key, value);
    else if (key == "embed_dim") cfg.dims.embed_dim = to_uint(key, value);
    else if (key == "vocab_buckets") cfg.dims.vocab_buckets = to_uint(key, value);
    else if (key == "margin") {
      if (value == "dynamic") {
        cfg.margin = MarginMode{};
      } else if (value.rfind("fixed:", 0) == 0) {
        cfg.margin = MarginMode::fixed(to_double(key, trim(value.substr(6))));
      } else {
        throw Error(ErrorCode::BadConfig, "margin must be 'dynamic' or 'fixed:<value>'");
      }
    } else if (key == "phases") {
      // epochs:alpha,beta,gamma ; epochs:alpha,beta,gamma ...
      cfg.phases.clear();
      std::stringstream list(value);
      for (std::string item; std::getline(list, item, ';');) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::BadConfig, "phase must be epochs:alpha,beta,gamma");
        cfg.phases.push_back({to_uint(key, trim(item.substr(0, colon))), parse_weights(key, item.substr(colon + 1))});
      }
    } else {
      throw Error(ErrorCode::BadConfig, "unknown config key '" + key + "'");
    }
  }
}

std::string describe_config(const TrainConfig& cfg, const LossWeights& weights) {
  nlohmann::ordered_json j;
  j["alpha"] = weights.alpha;
  j["beta"] = weights.beta;
  j["gamma"] = weights.gamma;
  j["learning_rate"] = cfg.learning_rate;
  j["weight_decay"] = cfg.weight_decay;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["margin"] = cfg.margin.dynamic ? std::string("dynamic") : "fixed:" + nlohmann::json(cfg.margin.fixed_value).dump();
  j["temperature"] = cfg.temperature;
  j["seed"] = cfg.seed;
  j["heldout_fraction"] = cfg.heldout_fraction;
  j["init_scale"] = cfg.init_scale;
  j["feature_dim"] = cfg.dims.feature_dim;
  j["embed_dim"] = cfg.dims.embed_dim;
  j["vocab_buckets"] = cfg.dims.vocab_buckets;
  auto phases = nlohmann::ordered_json::array();
  for (const auto& p : cfg.phases) {
    phases.push_back({{"epochs", p.epochs}, {"alpha", p.weights.alpha}, {"beta", p.weights.beta},
                      {"gamma", p.weights.gamma}});
  }
  j["phases"] = phases;
  return j.dump();
}

std::string log_to_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,contrastive,pos,neg,total,eps_pos,eps_neg,sr_pos,sr_neg\n";
  char buf[512];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f,%.6f\n", e.epoch, e.loss.contrastive,
                  e.loss.pos, e.loss.neg, e.loss.total, e.loss.epsilon_pos, e.loss.epsilon_neg, e.heldout.sr_pos,
                  e.heldout.sr_neg);
    out += buf;
  }
  return out;
}

}  // namespace specs
