#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ovdprobe {

enum class PromptKind { kHybrid, kSingleConcept, kDetection };
std::string to_string(PromptKind kind);

struct PromptSpec {
  PromptKind kind = PromptKind::kDetection;
  /// p1..p5 for detection prompts; empty otherwise.
  std::string id;
  std::string text;
  std::vector<std::string> components;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

inline constexpr const char* kHybridSuffix = "_hybrid";
inline constexpr const char* kSingleConceptTemplateTail = ", high resolution, standing on the road";
inline constexpr int kMaxHybridWords = 4;

/// Draws k uniformly from {1..4} (capped at the number of distinct nouns), then k distinct nouns in
/// draw order. Spaces inside a noun become underscores.
PromptSpec hybrid_prompt(const std::vector<std::string>& nouns, std::uint64_t seed);

/// Inverse of hybrid_prompt's text composition: the text without its "_hybrid" suffix.
std::optional<std::string> hybrid_stem(const std::string& text);

/// "<keyword>, high resolution, standing on the road". Throws on an empty keyword.
/// When `known` is nonempty and lacks the keyword, `warning` (if given) receives a message.
PromptSpec single_concept_prompt(const std::string& keyword,
                                 const std::vector<std::string>& known = {},
                                 std::string* warning = nullptr);

/// The five fixed detection prompts p1..p5, in order.
const std::vector<PromptSpec>& detection_prompts();
const PromptSpec& detection_prompt(const std::string& id);

/// The shipped unusual-object keyword list, verbatim and in order (duplicates kept).
const std::vector<std::string>& default_keywords();

}  // namespace ovdprobe
