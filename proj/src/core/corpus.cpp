#include "corpus.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <span>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "csv.hpp"
#include "error.hpp"
#include "random.hpp"
#include "utf8.hpp"

namespace convohate {

using nlohmann::json;

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::kParent: return "PARENT";
    case Role::kComment: return "COMMENT";
    case Role::kReply: return "REPLY";
  }
  return "?";
}

namespace {

std::size_t count_nodes(const TweetNode& node) {
  std::size_t n = 1;
  for (const auto& child : node.children) n += count_nodes(child);
  return n;
}

class TreeBuilder {
 public:
  explicit TreeBuilder(const ParseOptions& options) : options_(options) {}

  TweetNode build(const json& record, Role role, const std::string& where) {
    if (!record.is_object()) {
      throw Error(ErrorCode::kParse, where + ": expected an object");
    }
    TweetNode node;
    node.role = role;
    node.id = read_id(record, where);
    if (!seen_ids_.insert(node.id).second) {
      throw Error(ErrorCode::kSchema, where + ": duplicate id '" + node.id + "'");
    }
    const auto text = record.find("text");
    if (text == record.end() || !text->is_string()) {
      throw Error(ErrorCode::kParse, where + ": missing string field 'text'");
    }
    node.text = text->get<std::string>();
    if (!utf8::is_valid(node.text)) {
      throw Error(ErrorCode::kParse, where + ": text is not valid UTF-8");
    }
    node.label = read_label(record, where);

    const char* child_key = role == Role::kParent ? "comments" : "replies";
    for (const char* key : {"comments", "replies"}) {
      const auto it = record.find(key);
      if (it == record.end() || it->is_null()) continue;
      if (!it->is_array()) {
        throw Error(ErrorCode::kParse, where + ": '" + key + "' must be an array");
      }
      if (it->empty()) continue;
      if (role == Role::kReply) {
        throw Error(ErrorCode::kSchema,
                    where + ": node at depth 3 (replies cannot have children)");
      }
      if (std::string_view(key) != child_key) {
        throw Error(ErrorCode::kSchema, where + ": unexpected '" + key + "' under a " +
                                            std::string(to_string(role)) + " node");
      }
    }
    if (role != Role::kReply) {
      const Role child_role = role == Role::kParent ? Role::kComment : Role::kReply;
      const auto it = record.find(child_key);
      if (it != record.end() && it->is_array()) {
        std::size_t i = 0;
        for (const auto& child : *it) {
          node.children.push_back(
              build(child, child_role, where + "." + child_key + "[" + std::to_string(i++) + "]"));
        }
      }
    }
    if (role == Role::kParent && node.children.empty()) {
      throw Error(ErrorCode::kSchema, where + ": parent tweet has no comments");
    }
    return node;
  }

 private:
  static std::string read_id(const json& record, const std::string& where) {
    const auto it = record.find("id");
    if (it == record.end()) throw Error(ErrorCode::kParse, where + ": missing field 'id'");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return it->dump();
    throw Error(ErrorCode::kParse, where + ": 'id' must be a string or integer");
  }

  std::optional<Label> read_label(const json& record, const std::string& where) const {
    const auto it = record.find("label");
    if (it == record.end() || it->is_null()) {
      if (options_.allow_unlabeled) return std::nullopt;
      throw Error(ErrorCode::kMissingLabel, where + ": missing label");
    }
    if (!it->is_string()) throw Error(ErrorCode::kLabel, where + ": label must be a string");
    const auto label = parse_label(it->get_ref<const std::string&>());
    if (!label) {
      throw Error(ErrorCode::kLabel,
                  where + ": unknown label '" + it->get<std::string>() + "' (expected HOF or NOT)");
    }
    return label;
  }

  const ParseOptions& options_;
  std::unordered_set<std::string> seen_ids_;
};

void flatten_into(const TweetNode& node, std::vector<ChainNode>& path,
                  std::vector<Chain>& out, bool allow_unlabeled) {
  if (!node.label && !allow_unlabeled) {
    throw Error(ErrorCode::kMissingLabel, "node '" + node.id + "' has no label");
  }
  path.push_back(ChainNode{node.id, node.text, node.role, node.label});
  out.push_back(Chain{node.id, path, node.label});
  for (const auto& child : node.children) flatten_into(child, path, out, allow_unlabeled);
  path.pop_back();
}

}  // namespace

std::size_t ConversationTree::node_count() const { return count_nodes(root); }

std::vector<ConversationTree> parse_json_trees(std::string_view source,
                                               const ParseOptions& options) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "top level must be an object");
  const auto convs = doc.find("conversations");
  if (convs == doc.end() || !convs->is_array()) {
    throw Error(ErrorCode::kParse, "missing array field 'conversations'");
  }
  TreeBuilder builder(options);
  std::vector<ConversationTree> trees;
  trees.reserve(convs->size());
  std::size_t i = 0;
  for (const auto& record : *convs) {
    trees.push_back(
        ConversationTree{builder.build(record, Role::kParent,
                                       "conversations[" + std::to_string(i++) + "]")});
  }
  return trees;
}

std::vector<Chain> parse_chain_csv(std::string_view source, const ParseOptions& options) {
  if (!utf8::is_valid(source)) throw Error(ErrorCode::kParse, "CSV input is not valid UTF-8");
  const auto rows = csv::parse(source);
  if (rows.empty()) throw Error(ErrorCode::kParse, "CSV header row required");

  const auto& header = rows.front().fields;
  const auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kParse, "CSV header lacks column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("chain_id");
  const std::size_t c_parent = column("parent_text");
  const std::size_t c_comment = column("comment_text");
  const std::size_t c_reply = column("reply_text");
  const std::size_t c_label = column("label");

  std::vector<Chain> chains;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "CSV line " + std::to_string(row.line);
    if (row.fields.size() != header.size()) {
      throw Error(ErrorCode::kParse, where + ": expected " + std::to_string(header.size()) +
                                         " fields, found " + std::to_string(row.fields.size()));
    }
    Chain chain;
    chain.chain_id = row.fields[c_id];
    if (chain.chain_id.empty()) throw Error(ErrorCode::kParse, where + ": empty chain_id");
    if (!seen.insert(chain.chain_id).second) {
      throw Error(ErrorCode::kSchema, where + ": duplicate chain_id '" + chain.chain_id + "'");
    }
    const std::string& label_text = row.fields[c_label];
    if (label_text.empty()) {
      if (!options.allow_unlabeled) throw Error(ErrorCode::kMissingLabel, where + ": missing label");
    } else {
      chain.label = parse_label(label_text);
      if (!chain.label) {
        throw Error(ErrorCode::kLabel, where + ": unknown label '" + label_text + "'");
      }
    }
    const std::string& comment = row.fields[c_comment];
    const std::string& reply = row.fields[c_reply];
    if (comment.empty() && !reply.empty()) {
      throw Error(ErrorCode::kSchema, where + ": reply_text present without comment_text");
    }
    chain.nodes.push_back({chain.chain_id + "/0", row.fields[c_parent], Role::kParent, std::nullopt});
    if (!comment.empty()) chain.nodes.push_back({chain.chain_id + "/1", comment, Role::kComment, std::nullopt});
    if (!reply.empty()) chain.nodes.push_back({chain.chain_id + "/2", reply, Role::kReply, std::nullopt});
    chain.nodes.back().label = chain.label;
    chains.push_back(std::move(chain));
  }
  return chains;
}

ParsedCorpus parse_corpus(std::string_view source, CorpusFormat format,
                          const ParseOptions& options) {
  ParsedCorpus corpus;
  if (format == CorpusFormat::kJsonTree) {
    corpus.trees = parse_json_trees(source, options);
    corpus.chains = flatten(corpus.trees, options.allow_unlabeled);
  } else {
    corpus.chains = parse_chain_csv(source, options);
  }
  return corpus;
}

std::vector<Chain> flatten(const ConversationTree& tree, bool allow_unlabeled) {
  std::vector<Chain> out;
  std::vector<ChainNode> path;
  flatten_into(tree.root, path, out, allow_unlabeled);
  return out;
}

std::vector<Chain> flatten(const std::vector<ConversationTree>& trees, bool allow_unlabeled) {
  std::vector<Chain> out;
  for (const auto& tree : trees) {
    auto chains = flatten(tree, allow_unlabeled);
    std::move(chains.begin(), chains.end(), std::back_inserter(out));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<Chain>& chains) {
  if (chains.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus_stats: no chains");
  CorpusStats stats;
  stats.total_chains = chains.size();
  for (const auto& chain : chains) {
    if (!chain.label) {
      ++stats.unlabeled_count;
    } else if (*chain.label == Label::kHof) {
      ++stats.hof_count;
    } else {
      ++stats.not_count;
    }
    switch (chain.terminal_role()) {
      case Role::kParent: ++stats.parent_count; break;
      case Role::kComment: ++stats.comment_count; break;
      case Role::kReply: ++stats.reply_count; break;
    }
  }
  if (stats.parent_count > 0) {
    stats.avg_comments_per_parent = static_cast<std::size_t>(std::floor(
        static_cast<double>(stats.comment_count) / static_cast<double>(stats.parent_count) + 0.5));
  }
  return stats;
}

std::size_t stratified_train_count(double ratio, std::size_t class_total) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(class_total) + 0.5));
}

DataSplit stratified_split(const std::vector<Chain>& chains, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kArgument, "split ratio must lie in (0, 1)");
  }
  DataSplit split;
  split.ratio = ratio;
  split.seed = seed;

  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    if (!chains[i].label) {
      throw Error(ErrorCode::kMissingLabel,
                  "stratified_split: chain '" + chains[i].chain_id + "' has no label");
    }
    members[index_of(*chains[i].label)].push_back(i);
  }

  Rng rng(seed);
  std::vector<bool> in_train(chains.size(), false);
  for (Label label : kAllLabels) {
    auto& idx = members[index_of(label)];
    if (idx.empty()) {
      split.warnings.push_back("class " + std::string(to_string(label)) +
                               " has no members; split proceeds on remaining classes");
      continue;
    }
    rng.shuffle(std::span(idx));
    const std::size_t take = stratified_train_count(ratio, idx.size());
    for (std::size_t k = 0; k < take; ++k) in_train[idx[k]] = true;
  }
  for (std::size_t i = 0; i < chains.size(); ++i) {
    (in_train[i] ? split.train : split.val).push_back(chains[i]);
  }
  return split;
}

std::string write_chain_csv(const std::vector<Chain>& chains) {
  std::string out = "chain_id,parent_text,comment_text,reply_text,label\n";
  for (const auto& chain : chains) {
    std::vector<std::string> row(5);
    row[0] = chain.chain_id;
    for (std::size_t i = 0; i < chain.nodes.size() && i < 3; ++i) row[1 + i] = chain.nodes[i].text;
    if (chain.label) row[4] = std::string(to_string(*chain.label));
    csv::append_row(out, row);
  }
  return out;
}

}  // namespace convohate

namespace convohate {
namespace {

nlohmann::ordered_json node_to_json(const TweetNode& node) {
  nlohmann::ordered_json j;
  j["id"] = node.id;
  j["text"] = node.text;
  if (node.label) j["label"] = std::string(to_string(*node.label));
  if (node.role != Role::kReply) {
    auto children = nlohmann::ordered_json::array();
    for (const auto& child : node.children) children.push_back(node_to_json(child));
    j[node.role == Role::kParent ? "comments" : "replies"] = std::move(children);
  }
  return j;
}

}  // namespace

std::string write_json_trees(const std::vector<ConversationTree>& trees) {
  auto convs = nlohmann::ordered_json::array();
  for (const auto& tree : trees) convs.push_back(node_to_json(tree.root));
  return nlohmann::ordered_json{{"conversations", convs}}.dump(2) + "\n";
}

}  // namespace convohate
