#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace convohate {

// Roman-script Hindi to Devanagari, one whitespace token at a time.
// Implementations must be deterministic per engine_id. Returning nullopt
// reports a failure for that token; callers pass the token through.
class TransliterationEngine {
 public:
  virtual ~TransliterationEngine() = default;

  virtual std::string engine_id() const = 0;
  virtual std::optional<std::string> transliterate_token(std::string_view token) = 0;

  // Batch hint issued before a run of transliterate_token calls. Engines
  // backed by an external process use it to amortize process start-up.
  virtual void prime(std::span<const std::string> /*tokens*/) {}
};

class IdentityEngine final : public TransliterationEngine {
 public:
  std::string engine_id() const override { return "identity"; }
  std::optional<std::string> transliterate_token(std::string_view token) override {
    return std::string(token);
  }
};

// Lookup table keyed by lowercased ASCII. Leading and trailing ASCII
// punctuation is split off before lookup and re-attached afterwards, so
// "Kya?" resolves through the "kya" entry. Unknown words come back unchanged.
class DictionaryEngine final : public TransliterationEngine {
 public:
  explicit DictionaryEngine(std::map<std::string, std::string> entries,
                            std::string id = "dictionary");

  // Tab-separated "roman<TAB>devanagari" lines; '#' starts a comment line.
  static DictionaryEngine from_tsv(std::string_view text, std::string id = "dictionary");

  std::string engine_id() const override { return id_; }
  std::optional<std::string> transliterate_token(std::string_view token) override;

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
  std::string id_;
};

// Delegates to an external program (for example a wrapper around a neural
// transliteration model). The program reads one token per line on stdin and
// must write exactly one line per token on stdout. Results are cached, so
// each distinct token is sent at most once.
class ExternalCommandEngine final : public TransliterationEngine {
 public:
  explicit ExternalCommandEngine(std::string command);

  std::string engine_id() const override { return "external:" + command_; }
  std::optional<std::string> transliterate_token(std::string_view token) override;
  void prime(std::span<const std::string> tokens) override;

 private:
  void run_batch(const std::vector<std::string>& tokens);

  std::string command_;
  std::unordered_map<std::string, std::optional<std::string>> cache_;
};

}  // namespace convohate
