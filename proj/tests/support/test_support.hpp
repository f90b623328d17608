#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "label.hpp"
#include "preprocess.hpp"
#include "random.hpp"

namespace convohate::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "convohate-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Counts computed per instance, independently of the metrics module.
struct BruteScores {
  double macro_f1 = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double accuracy_percent = 0;
};

inline BruteScores brute_force_scores(const std::vector<Label>& gold, const std::vector<Label>& pred) {
  double p_sum = 0;
  double r_sum = 0;
  double f_sum = 0;
  for (Label c : kAllLabels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pred[i] == c && gold[i] == c) tp += 1;
      if (pred[i] == c && gold[i] != c) fp += 1;
      if (pred[i] != c && gold[i] == c) fn += 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    p_sum += p;
    r_sum += r;
    f_sum += f;
  }
  double correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i] ? 1 : 0;
  return {f_sum / 2, p_sum / 2, r_sum / 2, 100.0 * (correct / static_cast<double>(gold.size()))};
}

// Two keyword-disjoint classes of five-token texts.
inline std::vector<ProcessedInstance> separable_set(std::uint64_t seed, std::size_t n = 32) {
  static const char* kHof[] = {"bakwas", "chor", "pagal", "gadha", "kameena", "ullu", "jhootha", "nalayak"};
  static const char* kNot[] = {"dhanyavad", "madad", "accha", "shukriya", "doctor", "oxygen", "hospital", "support"};
  Rng rng(seed);
  std::vector<ProcessedInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hof = i % 2 == 0;
    std::string text;
    for (int k = 0; k < 5; ++k) {
      if (k) text += ' ';
      text += hof ? kHof[rng.uniform_below(8)] : kNot[rng.uniform_below(8)];
    }
    out.push_back({"s" + std::to_string(i), text, hof ? Label::kHof : Label::kNot});
  }
  return out;
}

// Strings built from the pieces the cleaning rules care about.
inline std::string random_noisy_string(Rng& rng) {
  static const char* kPieces[] = {
      "hello", "aap", "kya", "#tag", "#", "@", "@user_1", "http://x.co/a", "https://t.co/Z?q=1",
      "www.site.in", "www", "😀", "🙏🏽", "❤️", "‍", "👨‍👩‍👧", "1️⃣", "#️⃣", "[SENSEP]", "[SEN", "SEP]",
      "नमस्ते", "#भारत", "123", "1,00,000", "!", "?", ",", "(", ")", "a@b.com", "_", "é", " ",
      " ", "  ", "\t", "\n", "©", "™", "x#y", "##", "@@", "http", "://", "　"};
  std::string out;
  const std::size_t n = rng.uniform_below(12);
  for (std::size_t i = 0; i < n; ++i) {
    out += kPieces[rng.uniform_below(std::size(kPieces))];
    if (rng.uniform01() < 0.5) out += ' ';
  }
  return out;
}

}  // namespace convohate::testing
