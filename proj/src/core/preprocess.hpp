#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "label.hpp"
#include "transliteration.hpp"

namespace convohate {

struct SeparatorToken {
  std::string literal = "[SENSEP]";
};

// Punctuation and digits are always preserved; there is no switch for them.
struct CleaningConfig {
  bool strip_hashtags = true;
  bool strip_emojis = true;
  bool strip_urls = true;
  bool strip_mentions = true;
};

enum class Script { kDevanagari, kRoman, kOther };

std::string_view to_string(Script script) noexcept;

struct ProcessedInstance {
  std::string chain_id;
  std::string text;
  std::optional<Label> label;
};

struct TransliterationCounters {
  std::size_t tokens_seen = 0;
  std::size_t roman_tokens = 0;
  std::size_t failures = 0;
};

// Node texts joined with " <sep> ".
std::string concatenate_chain(const Chain& chain, const SeparatorToken& sep = {});

// Emoji code points first, then URL / mention / hashtag tokens, then
// whitespace collapse and trim. Occurrences of the separator are never
// touched. Normative rule definitions live in docs/cleaning-rules.md.
std::string clean(std::string_view text, const CleaningConfig& cfg = {},
                  const SeparatorToken& sep = {});

bool is_emoji_codepoint(char32_t cp) noexcept;

// Throws kArgument on an empty token.
Script detect_script(std::string_view token);

// Replaces every ROMAN whitespace token with the engine's output. Separator,
// DEVANAGARI and OTHER tokens pass through, and so does any token the engine
// fails on (counted in counters->failures). Whitespace is kept as is.
std::string transliterate(std::string_view text, TransliterationEngine& engine,
                          const SeparatorToken& sep = {},
                          TransliterationCounters* counters = nullptr);

// concatenate -> clean -> transliterate; label copied from the chain.
ProcessedInstance preprocess_chain(const Chain& chain, const SeparatorToken& sep,
                                   const CleaningConfig& cfg, TransliterationEngine& engine,
                                   TransliterationCounters* counters = nullptr);

// Runs preprocess_chain over a batch, priming the engine with every ROMAN
// token first.
std::vector<ProcessedInstance> preprocess_chains(const std::vector<Chain>& chains,
                                                 const SeparatorToken& sep,
                                                 const CleaningConfig& cfg,
                                                 TransliterationEngine& engine,
                                                 TransliterationCounters* counters = nullptr);

// "chain_id<TAB>label<TAB>text" per line; the label column is empty for
// unlabeled instances. Tabs and newlines inside text are written as spaces.
std::string write_instances(const std::vector<ProcessedInstance>& instances);
std::vector<ProcessedInstance> read_instances(std::string_view text);

}  // namespace convohate
