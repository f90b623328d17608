#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "label.hpp"

namespace convohate {

enum class Role { kParent = 0, kComment = 1, kReply = 2 };

std::string_view to_string(Role role) noexcept;

constexpr std::size_t depth_of(Role role) noexcept { return static_cast<std::size_t>(role); }

inline constexpr std::size_t kMaxDepth = 2;

struct TweetNode {
  std::string id;
  std::string text;
  Role role = Role::kParent;
  std::optional<Label> label;  // absent only on inference input
  std::vector<TweetNode> children;
};

// Rooted at a PARENT node. Children order is source order.
struct ConversationTree {
  TweetNode root;

  std::size_t node_count() const;
};

// A copy of the node fields a chain needs; chains outlive the trees they
// were flattened from.
struct ChainNode {
  std::string id;
  std::string text;
  Role role = Role::kParent;
  std::optional<Label> label;
};

// Root-to-node path, 1 to 3 nodes, starting at a PARENT. The chain label is
// the label of its last node.
struct Chain {
  std::string chain_id;
  std::vector<ChainNode> nodes;
  std::optional<Label> label;

  Role terminal_role() const { return nodes.back().role; }
};

struct CorpusStats {
  std::size_t total_chains = 0;
  std::size_t hof_count = 0;
  std::size_t not_count = 0;
  std::size_t unlabeled_count = 0;
  std::size_t parent_count = 0;
  std::size_t comment_count = 0;
  std::size_t reply_count = 0;
  std::size_t avg_comments_per_parent = 0;
};

struct DataSplit {
  std::vector<Chain> train;
  std::vector<Chain> val;
  double ratio = 0.8;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

enum class CorpusFormat { kJsonTree, kCsvFlat };

struct ParseOptions {
  // Inference mode: labels may be absent.
  bool allow_unlabeled = false;
};

// Both formats end up as chains. JSON trees are kept alongside so callers can
// inspect structure; pre-flattened CSV has no trees.
struct ParsedCorpus {
  std::vector<ConversationTree> trees;
  std::vector<Chain> chains;
};

// Validates and builds trees from the JSON tree schema. Throws kParse on
// malformed JSON, kSchema on depth/id/structure violations, kLabel on unknown
// label strings and kMissingLabel on absent labels outside inference mode.
std::vector<ConversationTree> parse_json_trees(std::string_view source,
                                               const ParseOptions& options = {});

std::vector<Chain> parse_chain_csv(std::string_view source, const ParseOptions& options = {});

ParsedCorpus parse_corpus(std::string_view source, CorpusFormat format,
                          const ParseOptions& options = {});

// One chain per node, in depth-first pre-order. Throws kMissingLabel when a
// node lacks a label, unless allow_unlabeled is set.
std::vector<Chain> flatten(const ConversationTree& tree, bool allow_unlabeled = false);
std::vector<Chain> flatten(const std::vector<ConversationTree>& trees, bool allow_unlabeled = false);

CorpusStats corpus_stats(const std::vector<Chain>& chains);

// Nearest integer, halves rounded up.
std::size_t stratified_train_count(double ratio, std::size_t class_total);

// Per class, a seeded uniform shuffle picks stratified_train_count members for
// train; the remainder goes to val. Both halves keep input order.
DataSplit stratified_split(const std::vector<Chain>& chains, double ratio, std::uint64_t seed);

std::string write_chain_csv(const std::vector<Chain>& chains);

}  // namespace convohate

namespace convohate {

// Serializes trees in the JSON tree schema. Absent labels are omitted.
std::string write_json_trees(const std::vector<ConversationTree>& trees);

}  // namespace convohate
