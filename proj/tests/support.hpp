#pragma once

#include <unistd.h>

#include <filesystem>
#include <optional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specs/error.hpp"
#include "specs/rng.hpp"

namespace specs::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("specs_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Code of the Error raised by `fn`, or nothing when it returns normally.
template <class F>
std::optional<ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Caption-like text from a fixed phrase inventory.
inline std::string random_caption(Rng& rng) {
  static const std::vector<std::string> subjects = {
      "A dog", "The cat", "A small red car", "Two people", "The old man", "A wooden table", "the woman",
      "A large building", "Several birds", "The bright sign"};
  static const std::vector<std::string> verbs = {"sits", "is standing", "runs", "is parked", "are flying",
                                                 "holds", "is covered", "looks", "rests", "was placed"};
  static const std::vector<std::string> pps = {
      "on a mat",      "in a park",        "with fringed edges", "of a statue",  "near the window",
      "under a tree",  "beside the road",  "on cement",          "at the beach", "behind a fence",
      "in the corner", "with a red handle", "from the left",     "to the right", "over the water"};
  static const std::vector<std::string> objects = {"a ball", "the blue sky", "a bag", "white flowers",
                                                   "a small boat", "the green grass"};
  std::string out;
  const std::size_t sentences = 1 + rng.below(3);
  for (std::size_t s = 0; s < sentences; ++s) {
    if (!out.empty()) out += ' ';
    const auto pick = [&](const std::vector<std::string>& v) { return v[rng.below(v.size())]; };
    if (rng.below(4) == 0) out += pick(pps) + " ";
    std::string sentence = pick(subjects);
    if (rng.below(3) != 0) sentence += " " + pick(pps);
    sentence += " " + pick(verbs);
    if (rng.below(2) == 0) sentence += " " + pick(objects);
    for (std::size_t k = rng.below(3); k > 0; --k) sentence += " " + pick(pps);
    if (rng.below(3) == 0) sentence += " and " + pick(objects);
    if (rng.below(4) == 0) sentence += ", " + pick(pps);
    if (s == 0 && sentence[0] == 't') sentence[0] = 'T';
    out += sentence + (rng.below(5) == 0 ? "" : ".");
  }
  return out;
}

}  // namespace specs::testing
