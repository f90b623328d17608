#include "synthetic.hpp"

#include <array>
#include <numeric>
#include <string_view>

#include "error.hpp"
#include "random.hpp"

namespace convohate {
namespace {

constexpr std::array<std::string_view, 12> kHofWords = {
    "fake", "liar", "shameless", "jhootha", "bakwas", "chor",
    "pagal", "nonsense", "gunda", "dhokebaaz", "useless", "bewakoof"};
constexpr std::array<std::string_view, 12> kNotWords = {
    "thanks", "oxygen", "doctor", "supply", "dhanyavad", "accha",
    "sahi", "madad", "hospital", "update", "shukriya", "helpful"};
constexpr std::array<std::string_view, 12> kFillers = {
    "aap", "kya", "hai", "ye", "the", "is", "very", "log", "sab", "bhi", "and", "today"};
constexpr std::array<std::string_view, 6> kNoise = {
    "#India", "@user12", "https://t.co/x9Yz", "🙏", "😡", "भारत"};

constexpr std::array<std::pair<std::string_view, std::string_view>, 18> kDictionary = {{
    {"jhootha", "झूठा"}, {"bakwas", "बकवास"},   {"chor", "चोर"},       {"pagal", "पागल"},
    {"gunda", "गुंडा"},   {"dhokebaaz", "धोखेबाज़"}, {"bewakoof", "बेवकूफ"}, {"dhanyavad", "धन्यवाद"},
    {"accha", "अच्छा"},  {"sahi", "सही"},        {"madad", "मदद"},       {"shukriya", "शुक्रिया"},
    {"aap", "आप"},      {"kya", "क्या"},         {"hai", "है"},          {"ye", "ये"},
    {"log", "लोग"},     {"sab", "सब"},
}};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.uniform_below(N)];
}

std::string make_text(Rng& rng, Label label, double noise) {
  const bool flip = rng.uniform01() < noise;
  const bool hof_words = (label == Label::kHof) != flip;
  std::string text;
  const auto add = [&](std::string_view w) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  };
  const std::size_t n = 5 + rng.uniform_below(4);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      add(hof_words ? pick(rng, kHofWords) : pick(rng, kNotWords));
    } else {
      add(pick(rng, kFillers));
    }
  }
  if (rng.uniform01() < 0.5) add(pick(rng, kNoise));
  if (rng.uniform01() < 0.2) text += "!";
  return text;
}

}  // namespace

std::vector<ConversationTree> synthesize_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.parents == 0) throw Error(ErrorCode::kArgument, "synthetic corpus needs at least one parent");
  if (spec.comments < spec.parents) {
    throw Error(ErrorCode::kArgument, "every parent needs a comment: comments must be >= parents");
  }
  if (spec.replies > 0 && spec.comments == 0) {
    throw Error(ErrorCode::kArgument, "replies need comments");
  }
  const std::size_t total = spec.parents + spec.comments + spec.replies;
  if (spec.hof_count > total) throw Error(ErrorCode::kArgument, "hof_count exceeds node count");

  Rng rng(spec.seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<Label> labels(total, Label::kNot);
  for (std::size_t k = 0; k < spec.hof_count; ++k) labels[order[k]] = Label::kHof;

  // Node numbering: parents first, then comments, then replies.
  std::size_t next = 0;
  const auto make_node = [&](Role role) {
    const std::size_t n = next++;
    TweetNode node;
    node.id = spec.id_prefix + std::to_string(n);
    node.role = role;
    node.label = labels[n];
    node.text = make_text(rng, labels[n], spec.lexical_noise);
    return node;
  };

  std::vector<ConversationTree> trees;
  trees.reserve(spec.parents);
  for (std::size_t p = 0; p < spec.parents; ++p) trees.push_back({make_node(Role::kParent)});
  std::vector<TweetNode*> comment_slots;
  for (std::size_t c = 0; c < spec.comments; ++c) {
    auto& parent = trees[c % spec.parents].root;
    parent.children.push_back(make_node(Role::kComment));
  }
  for (auto& tree : trees)
    for (auto& comment : tree.root.children) comment_slots.push_back(&comment);
  for (std::size_t r = 0; r < spec.replies; ++r) {
    comment_slots[r % comment_slots.size()]->children.push_back(make_node(Role::kReply));
  }
  return trees;
}

std::string synthetic_dictionary_tsv() {
  std::string out = "# roman\tdevanagari\n";
  for (const auto& [roman, deva] : kDictionary) {
    out += roman;
    out += '\t';
    out += deva;
    out += '\n';
  }
  return out;
}

}  // namespace convohate
