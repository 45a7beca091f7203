#include "ovdprobe/prompts.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "ovdprobe/random.hpp"

namespace ovdprobe {

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kHybrid: return "hybrid";
    case PromptKind::kSingleConcept: return "single_concept";
    case PromptKind::kDetection: return "detection";
  }
  return "unknown";
}

PromptSpec hybrid_prompt(const std::vector<std::string>& nouns, std::uint64_t seed) {
  std::vector<std::string> distinct;
  std::unordered_set<std::string> seen;
  for (auto noun : nouns) {
    std::replace(noun.begin(), noun.end(), ' ', '_');
    if (!noun.empty() && seen.insert(noun).second) distinct.push_back(std::move(noun));
  }
  if (distinct.empty()) throw std::invalid_argument("hybrid_prompt: empty noun list");

  Rng rng(seed);
  const std::size_t k = std::min<std::size_t>(1 + uniform_index(rng, kMaxHybridWords), distinct.size());

  PromptSpec spec;
  spec.kind = PromptKind::kHybrid;
  spec.seed = seed;
  for (auto i : draw_without_replacement(rng, distinct.size(), k)) {
    spec.text += distinct[i];
    spec.text += '_';
    spec.components.push_back(distinct[i]);
  }
  spec.text += "hybrid";
  return spec;
}

std::optional<std::string> hybrid_stem(const std::string& text) {
  const std::string suffix = kHybridSuffix;
  if (text.size() <= suffix.size() || !text.ends_with(suffix)) return std::nullopt;
  return text.substr(0, text.size() - suffix.size());
}

PromptSpec single_concept_prompt(const std::string& keyword, const std::vector<std::string>& known,
                                 std::string* warning) {
  if (keyword.empty()) throw std::invalid_argument("single_concept_prompt: empty keyword");
  if (!known.empty() && std::find(known.begin(), known.end(), keyword) == known.end() && warning)
    *warning = "keyword '" + keyword + "' is not in the configured keyword list";
  PromptSpec spec;
  spec.kind = PromptKind::kSingleConcept;
  spec.text = keyword + kSingleConceptTemplateTail;
  spec.components = {keyword};
  return spec;
}

const std::vector<PromptSpec>& detection_prompts() {
  static const std::vector<PromptSpec> prompts = [] {
    const std::pair<const char*, const char*> table[] = {
        {"p1", "object"},
        {"p2", "object . animal . person"},
        {"p3", "object on the street"},
        {"p4", "obstacle on the street"},
        {"p5", "something on the street"},
    };
    std::vector<PromptSpec> out;
    for (const auto& [id, text] : table) out.push_back({PromptKind::kDetection, id, text, {}, {}});
    return out;
  }();
  return prompts;
}

const PromptSpec& detection_prompt(const std::string& id) {
  for (const auto& p : detection_prompts())
    if (p.id == id) return p;
  throw std::invalid_argument("unknown detection prompt id '" + id + "'");
}

const std::vector<std::string>& default_keywords() {
  // keep in sync with data/keywords.txt
  static const std::vector<std::string> keywords = {
      "robot", "helicopter", "monster", "skateboard",
      "dog", "cat", "monkey", "horse", "elephant", "lion",
      "tiger", "bear", "deer", "rabbit", "squirrel", "wolf",
      "fox", "sheep", "goat", "chicken", "crocodile", "alligator", "hamster", "gerbil", "mouse",
      "rat", "guinea pig", "ferret", "rabbit", "cavy", "tapir",
      "hedgehog", "kangaroo", "koala", "panda", "zebra",
      "giraffe", "hippopotamus", "rhinoceros", "sloth", "antelope",
      "bison", "buffalo", "ostrich", "emu", "penguin", "seal", "walrus", "manatee", "platypus", "okapi",
      "armadillo", "badger", "mole", "opossum", "raccoon",
      "porcupine", "weasel", "lemur", "gorilla", "chimpanzee",
      "orangutan", "tamarin", "sloth bear", "sea lion", "tortoise",
      "flamingo", "robot", "helicopter", "monster", "skateboard",
      "Sofa", "Coffee table", "Bookshelf", "Lamps",
      "Cutting board", "Pots pans", "Dishes",
      "Desk", "Chair", "Printer",
      "Vacuum cleaner", "Fan", "Clock", "Shoes",
  };
  return keywords;
}

}  // namespace ovdprobe
