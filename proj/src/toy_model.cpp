#include "specs/toy_model.hpp"

#include <cctype>

#include "specs/binary_io.hpp"
#include "specs/error.hpp"
#include "specs/rng.hpp"

namespace specs {

std::size_t token_bucket(std::string_view token, std::size_t vocab_buckets) {
  std::string lowered(token);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return static_cast<std::size_t>(fnv1a(lowered) % vocab_buckets);
}

ToyDualEncoder ToyDualEncoder::initialize(const ToyDims& dims, std::uint64_t seed, double scale) {
  ToyDualEncoder m;
  m.image_proj.resize(static_cast<Eigen::Index>(dims.feature_dim), static_cast<Eigen::Index>(dims.embed_dim));
  m.token_table.resize(static_cast<Eigen::Index>(dims.vocab_buckets), static_cast<Eigen::Index>(dims.embed_dim));
  Rng rng(derive_seed(seed, "toy-init"));
  for (Eigen::Index i = 0; i < m.image_proj.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.image_proj.cols(); ++j) m.image_proj(i, j) = scale * rng.normal();
  }
  for (Eigen::Index i = 0; i < m.token_table.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.token_table.cols(); ++j) m.token_table(i, j) = scale * rng.normal();
  }
  return m;
}

std::vector<std::size_t> ToyDualEncoder::token_ids(std::string_view text) const {
  std::vector<std::size_t> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) ids.push_back(token_bucket(text.substr(i, j - i), static_cast<std::size_t>(token_table.rows())));
    i = j;
  }
  return ids;
}

namespace {

Eigen::VectorXd normalized(const Eigen::VectorXd& v, const char* what) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::ZeroVector, std::string(what) + " encodes to a zero vector");
  return v / norm;
}

template <typename T>
Eigen::VectorXd project(const Eigen::MatrixXd& proj, std::span<const T> features) {
  if (features.size() != static_cast<std::size_t>(proj.rows())) {
    throw Error(ErrorCode::DimMismatch, "image has " + std::to_string(features.size()) +
                                            " features, model expects " + std::to_string(proj.rows()));
  }
  Eigen::VectorXd f(proj.rows());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = static_cast<double>(features[static_cast<std::size_t>(i)]);
  return normalized(proj.transpose() * f, "image");
}

}  // namespace

Eigen::VectorXd ToyDualEncoder::encode_image(std::span<const double> features) const {
  return project(image_proj, features);
}

Eigen::VectorXd ToyDualEncoder::encode_image(std::span<const float> features) const {
  return project(image_proj, features);
}

Eigen::VectorXd ToyDualEncoder::encode_text(std::string_view text) const {
  const auto ids = token_ids(text);
  if (ids.empty()) throw Error(ErrorCode::ZeroVector, "text has no tokens");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(token_table.cols());
  for (std::size_t id : ids) sum += token_table.row(static_cast<Eigen::Index>(id)).transpose();
  return normalized(sum / static_cast<double>(ids.size()), "text");
}

std::string encode_model(const ToyDualEncoder& model) {
  std::string out(kModelMagic);
  const ToyDims d = model.dims();
  binary::put_le<std::uint32_t>(out, kModelVersion);
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.feature_dim));
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.embed_dim));
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.vocab_buckets));
  for (const Eigen::MatrixXd* m : {&model.image_proj, &model.token_table}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) binary::put_f64(out, (*m)(i, j));
    }
  }
  return out;
}

ToyDualEncoder decode_model(std::string_view bytes) {
  binary::Reader in(bytes);
  if (bytes.size() < kModelMagic.size() || in.take(kModelMagic.size()) != kModelMagic) {
    throw Error(ErrorCode::BadMagic, "not a SPECMDL1 file");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kModelVersion) {
    throw Error(ErrorCode::BadVersion, "unsupported SPECMDL1 version " + std::to_string(version));
  }
  ToyDims d;
  d.feature_dim = in.le<std::uint32_t>();
  d.embed_dim = in.le<std::uint32_t>();
  d.vocab_buckets = in.le<std::uint32_t>();
  if (d.feature_dim == 0 || d.embed_dim == 0 || d.vocab_buckets == 0) {
    throw Error(ErrorCode::DimMismatch, "model dimensions must be positive");
  }
  ToyDualEncoder m;
  m.image_proj.resize(static_cast<Eigen::Index>(d.feature_dim), static_cast<Eigen::Index>(d.embed_dim));
  m.token_table.resize(static_cast<Eigen::Index>(d.vocab_buckets), static_cast<Eigen::Index>(d.embed_dim));
  for (Eigen::MatrixXd* mat : {&m.image_proj, &m.token_table}) {
    for (Eigen::Index i = 0; i < mat->rows(); ++i) {
      for (Eigen::Index j = 0; j < mat->cols(); ++j) (*mat)(i, j) = in.f64();
    }
  }
  if (!in.at_end()) throw Error(ErrorCode::TruncatedFile, "unexpected trailing bytes in model file");
  if (!m.all_finite()) throw Error(ErrorCode::NonFinite, "model file holds non-finite parameters");
  return m;
}

void save_model(const std::string& path, const ToyDualEncoder& model) {
  binary::write_file(path, encode_model(model));
}

ToyDualEncoder load_model(const std::string& path) { return decode_model(binary::read_file(path)); }

}  // namespace specs
