#include "preprocess.hpp"

#include <algorithm>
#include <unordered_set>

#include "error.hpp"
#include "utf8.hpp"

namespace convohate {
namespace {

// Emoji-property code points that sit outside the pictograph and dingbat
// blocks. Digits, '#' and '*' carry the property too but are deliberately
// absent: they are numbers and punctuation here.
constexpr std::pair<char32_t, char32_t> kEmojiRanges[] = {
    {0x00A9, 0x00A9},   {0x00AE, 0x00AE},   {0x203C, 0x203C},   {0x2049, 0x2049},
    {0x20E3, 0x20E3},   {0x2122, 0x2122},   {0x2139, 0x2139},   {0x2194, 0x2199},
    {0x21A9, 0x21AA},   {0x231A, 0x231B},   {0x2328, 0x2328},   {0x23CF, 0x23CF},
    {0x23E9, 0x23F3},   {0x23F8, 0x23FA},   {0x24C2, 0x24C2},   {0x25AA, 0x25AB},
    {0x25B6, 0x25B6},   {0x25C0, 0x25C0},   {0x25FB, 0x25FE},   {0x2600, 0x27BF},
    {0x2934, 0x2935},   {0x2B05, 0x2B07},   {0x2B1B, 0x2B1C},   {0x2B50, 0x2B50},
    {0x2B55, 0x2B55},   {0x3030, 0x3030},   {0x303D, 0x303D},   {0x3297, 0x3297},
    {0x3299, 0x3299},   {0xFE0E, 0xFE0F},   {0x1F000, 0x1FAFF}, {0xE0020, 0xE007F},
};

constexpr char32_t kZwj = 0x200D;

bool is_ascii_word(char32_t cp) noexcept {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
         cp == '_';
}

bool is_devanagari(char32_t cp) noexcept { return cp >= 0x0900 && cp <= 0x097F; }

bool is_hashtag_char(char32_t cp) noexcept { return is_ascii_word(cp) || is_devanagari(cp); }

char32_t ascii_lower(char32_t cp) noexcept {
  return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
}

bool starts_with_ci(std::u32string_view s, std::size_t pos, std::string_view prefix) noexcept {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[pos + i]) != static_cast<char32_t>(prefix[i])) return false;
  }
  return true;
}

std::u32string strip_emoji(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char32_t cp = in[i];
    if (is_emoji_codepoint(cp)) continue;
    if (cp == kZwj) {
      const bool joins_emoji = (i > 0 && is_emoji_codepoint(in[i - 1])) ||
                               (i + 1 < in.size() && is_emoji_codepoint(in[i + 1]));
      if (joins_emoji) continue;
    }
    out.push_back(cp);
  }
  return out;
}

// Single left-to-right scan. The boundary test looks at the last code point
// already emitted, so a removal never exposes a new match to a second pass.
std::u32string strip_tokens(std::u32string_view in, const CleaningConfig& cfg) {
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool at_boundary = out.empty() || !is_hashtag_char(out.back());
    if (at_boundary && cfg.strip_urls &&
        (starts_with_ci(in, i, "http://") || starts_with_ci(in, i, "https://") ||
         starts_with_ci(in, i, "www."))) {
      while (i < in.size() && !utf8::is_whitespace(in[i])) ++i;
      continue;
    }
    if (at_boundary && cfg.strip_mentions && in[i] == '@' && i + 1 < in.size() &&
        is_ascii_word(in[i + 1])) {
      ++i;
      while (i < in.size() && is_ascii_word(in[i])) ++i;
      continue;
    }
    if (at_boundary && cfg.strip_hashtags && in[i] == '#' && i + 1 < in.size() &&
        is_hashtag_char(in[i + 1])) {
      ++i;
      while (i < in.size() && is_hashtag_char(in[i])) ++i;
      continue;
    }
    out.push_back(in[i++]);
  }
  return out;
}

std::u32string collapse_whitespace(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char32_t cp : in) {
    if (utf8::is_whitespace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return out;
}

std::string sanitize_field(std::string_view text) {
  std::string out(text);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return out;
}

}  // namespace

std::string_view to_string(Script script) noexcept {
  switch (script) {
    case Script::kDevanagari: return "DEVANAGARI";
    case Script::kRoman: return "ROMAN";
    case Script::kOther: return "OTHER";
  }
  return "?";
}

bool is_emoji_codepoint(char32_t cp) noexcept {
  for (const auto& [lo, hi] : kEmojiRanges) {
    if (cp < lo) return false;
    if (cp <= hi) return true;
  }
  return false;
}

std::string concatenate_chain(const Chain& chain, const SeparatorToken& sep) {
  std::string out;
  const std::string glue = " " + sep.literal + " ";
  for (std::size_t i = 0; i < chain.nodes.size(); ++i) {
    if (i > 0) out += glue;
    out += chain.nodes[i].text;
  }
  return out;
}

std::string clean(std::string_view text, const CleaningConfig& cfg, const SeparatorToken& sep) {
  const std::u32string cps = utf8::decode(text);
  const std::u32string sep_cps = utf8::decode(sep.literal);

  std::u32string joined;
  joined.reserve(cps.size());
  std::size_t start = 0;
  while (true) {
    const std::size_t hit = sep_cps.empty() ? std::u32string::npos : cps.find(sep_cps, start);
    std::u32string_view segment(cps.data() + start,
                                (hit == std::u32string::npos ? cps.size() : hit) - start);
    std::u32string piece = cfg.strip_emojis ? strip_emoji(segment) : std::u32string(segment);
    joined += strip_tokens(piece, cfg);
    if (hit == std::u32string::npos) break;
    joined += sep_cps;
    start = hit + sep_cps.size();
  }
  return utf8::encode(collapse_whitespace(joined));
}

Script detect_script(std::string_view token) {
  if (token.empty()) throw Error(ErrorCode::kArgument, "detect_script: empty token");
  bool has_latin_letter = false;
  bool has_other_letter = false;
  for (char32_t cp : utf8::decode(token)) {
    if (is_devanagari(cp)) return Script::kDevanagari;
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) {
      has_latin_letter = true;
    } else if (cp >= 0x80) {
      // Latin-1 punctuation/symbols, general punctuation and emoji are not
      // letters; anything else non-ASCII counts as a non-basic-Latin letter.
      const bool symbol = (cp >= 0xA0 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
                          (cp >= 0x2000 && cp <= 0x206F) || is_emoji_codepoint(cp);
      if (!symbol) has_other_letter = true;
    }
  }
  return has_latin_letter && !has_other_letter ? Script::kRoman : Script::kOther;
}

std::string transliterate(std::string_view text, TransliterationEngine& engine,
                          const SeparatorToken& sep, TransliterationCounters* counters) {
  std::string out;
  out.reserve(text.size() * 2);
  const std::u32string cps = utf8::decode(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (utf8::is_whitespace(cps[i])) {
      utf8::append(out, cps[i++]);
      continue;
    }
    const std::size_t begin = i;
    while (i < cps.size() && !utf8::is_whitespace(cps[i])) ++i;
    const std::string token = utf8::encode(std::u32string_view(cps).substr(begin, i - begin));
    if (counters) ++counters->tokens_seen;
    if (token == sep.literal || detect_script(token) != Script::kRoman) {
      out += token;
      continue;
    }
    if (counters) ++counters->roman_tokens;
    std::optional<std::string> result;
    try {
      result = engine.transliterate_token(token);
    } catch (const std::exception&) {
      result.reset();
    }
    if (!result || !utf8::is_valid(*result)) {
      if (counters) ++counters->failures;
      out += token;
    } else {
      out += *result;
    }
  }
  return out;
}

ProcessedInstance preprocess_chain(const Chain& chain, const SeparatorToken& sep,
                                   const CleaningConfig& cfg, TransliterationEngine& engine,
                                   TransliterationCounters* counters) {
  const std::string cleaned = clean(concatenate_chain(chain, sep), cfg, sep);
  return ProcessedInstance{chain.chain_id, transliterate(cleaned, engine, sep, counters),
                           chain.label};
}

std::vector<ProcessedInstance> preprocess_chains(const std::vector<Chain>& chains,
                                                 const SeparatorToken& sep,
                                                 const CleaningConfig& cfg,
                                                 TransliterationEngine& engine,
                                                 TransliterationCounters* counters) {
  std::vector<std::string> cleaned;
  cleaned.reserve(chains.size());
  std::vector<std::string> roman;
  std::unordered_set<std::string> seen;
  for (const auto& chain : chains) {
    cleaned.push_back(clean(concatenate_chain(chain, sep), cfg, sep));
    for (auto& token : utf8::split_whitespace(cleaned.back())) {
      if (token != sep.literal && detect_script(token) == Script::kRoman &&
          seen.insert(token).second) {
        roman.push_back(std::move(token));
      }
    }
  }
  engine.prime(roman);

  std::vector<ProcessedInstance> out;
  out.reserve(chains.size());
  for (std::size_t i = 0; i < chains.size(); ++i) {
    out.push_back({chains[i].chain_id, transliterate(cleaned[i], engine, sep, counters),
                   chains[i].label});
  }
  return out;
}

std::string write_instances(const std::vector<ProcessedInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += sanitize_field(inst.chain_id);
    out += '\t';
    if (inst.label) out += to_string(*inst.label);
    out += '\t';
    out += sanitize_field(inst.text);
    out += '\n';
  }
  return out;
}

std::vector<ProcessedInstance> read_instances(std::string_view text) {
  std::vector<ProcessedInstance> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "instance file line " + std::to_string(line_no) +
                                         ": expected 3 tab-separated fields");
    }
    ProcessedInstance inst;
    inst.chain_id = std::string(line.substr(0, t1));
    const auto label_text = line.substr(t1 + 1, t2 - t1 - 1);
    if (!label_text.empty()) {
      inst.label = parse_label(label_text);
      if (!inst.label) {
        throw Error(ErrorCode::kLabel, "instance file line " + std::to_string(line_no) +
                                           ": unknown label '" + std::string(label_text) + "'");
      }
    }
    inst.text = std::string(line.substr(t2 + 1));
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace convohate
