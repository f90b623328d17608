#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace convohate {

// Shape of a generated corpus. Every parent gets at least one comment;
// comments are spread evenly over parents and replies over comments, and
// exactly hof_count nodes (chosen by seed) are labeled HOF.
struct SyntheticCorpusSpec {
  std::size_t parents = 12;
  std::size_t comments = 120;
  std::size_t replies = 60;
  std::size_t hof_count = 96;
  std::uint64_t seed = 7;
  // Fraction of nodes whose wording is drawn from the other class's lexicon.
  double lexical_noise = 0.15;
  std::string id_prefix = "t";
};

std::vector<ConversationTree> synthesize_corpus(const SyntheticCorpusSpec& spec);

// Roman-to-Devanagari entries covering the Hinglish words the generator
// uses, as dictionary TSV.
std::string synthetic_dictionary_tsv();

}  // namespace convohate
