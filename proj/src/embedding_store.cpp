#include "specs/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "specs/binary_io.hpp"
#include "specs/error.hpp"

namespace specs {

namespace binary {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

}  // namespace binary

void EmbeddingTable::add(std::string id, std::vector<float> vec) {
  if (ids_.empty() && dim_ == 0) dim_ = static_cast<std::uint32_t>(vec.size());
  if (vec.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "vector for '" + id + "' has " + std::to_string(vec.size()) +
                                            " components, table dim is " + std::to_string(dim_));
  }
  for (float v : vec) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite component in '" + id + "'");
  }
  if (index_.contains(id)) throw Error(ErrorCode::DuplicateId, "duplicate id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  vectors_.push_back(std::move(vec));
}

const std::vector<float>* EmbeddingTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

const std::vector<float>& EmbeddingTable::at(std::string_view id) const {
  if (const auto* v = find(id)) return *v;
  throw Error(ErrorCode::DataMissing, "no embedding for id '" + std::string(id) + "'");
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  if (dim_ != other.dim_ || ids_ != other.ids_) return false;
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    // Bitwise, so -0.0 and 0.0 differ.
    if (std::memcmp(vectors_[i].data(), other.vectors_[i].data(), vectors_[i].size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

std::string encode_binary(const EmbeddingTable& table) {
  std::string out;
  out.reserve(24 + table.size() * (2 + 16 + 4 * std::size_t{table.dim()}));
  out.append(kEmbeddingMagic);
  binary::put_le<std::uint32_t>(out, kEmbeddingVersion);
  binary::put_le<std::uint32_t>(out, table.dim());
  binary::put_le<std::uint64_t>(out, table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& id = table.id(i);
    if (id.size() > UINT16_MAX) throw Error(ErrorCode::BadConfig, "id longer than 65535 bytes");
    binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.append(id);
    for (float v : table.vector(i)) binary::put_f32(out, v);
  }
  return out;
}

EmbeddingTable decode_binary(std::string_view bytes) {
  binary::Reader in(bytes);
  if (bytes.size() < kEmbeddingMagic.size() || in.take(kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw Error(ErrorCode::BadMagic, "not a SPECEMB1 file");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kEmbeddingVersion) {
    throw Error(ErrorCode::BadVersion, "unsupported SPECEMB1 version " + std::to_string(version));
  }
  const auto dim = in.le<std::uint32_t>();
  const auto count = in.le<std::uint64_t>();
  if (dim == 0) throw Error(ErrorCode::DimMismatch, "dim must be positive");
  EmbeddingTable table(dim);
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto id_len = in.le<std::uint16_t>();
    std::string id(in.take(id_len));
    std::vector<float> vec(dim);
    for (auto& v : vec) v = in.f32();
    table.add(std::move(id), std::move(vec));
  }
  if (!in.at_end()) {
    throw Error(ErrorCode::TruncatedFile, std::to_string(in.remaining()) + " unexpected trailing bytes");
  }
  return table;
}

std::string encode_jsonl(const EmbeddingTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    nlohmann::json row = {{"id", table.id(i)}, {"vec", table.vector(i)}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

EmbeddingTable decode_jsonl(std::string_view text) {
  EmbeddingTable table;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
      table.add(row.at("id").get<std::string>(), row.at("vec").get<std::vector<float>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::DataMissing, "embedding line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

namespace {
bool is_jsonl(const std::string& path) {
  return path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
}
}  // namespace

void save_table(const std::string& path, const EmbeddingTable& table) {
  binary::write_file(path, is_jsonl(path) ? encode_jsonl(table) : encode_binary(table));
}

EmbeddingTable load_table(const std::string& path) {
  const std::string bytes = binary::read_file(path);
  return is_jsonl(path) ? decode_jsonl(bytes) : decode_binary(bytes);
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "cosine of vectors with " + std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()) + " components");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

}  // namespace specs
