#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsforge/core.hpp"
#include "dsforge/embeddings.hpp"
#include "dsforge/error.hpp"

namespace dsforge {

inline constexpr std::string_view kDefaultLlmQuery =
    "Can you recommend {count} simple prompts for image creation? I want to generate "
    "photo-realistic {class} images with txt2img model";

/// Query sent to a chat model. `{class}` must occur exactly once; `{count}` is optional.
struct LlmQuery {
  std::string query_template{kDefaultLlmQuery};
  int count = 10;
};

/// "a photo of one <name>[ <context>]"
Prompt naive_prompt(const Label& label);

/// Throws InvalidArgument when the template does not contain {class} exactly once.
std::string build_llm_query(const Label& label, const LlmQuery& query = {});

/// The response contained no list items. Carries the raw text for triage.
class EmptyResponse : public Error {
 public:
  explicit EmptyResponse(std::string raw)
      : Error("LLM response contains no list items"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Extracts "1." / "1)" / "-" list items in order, strips markers, quotes and whitespace,
/// drops duplicates, and keeps at most `expected` prompts. Throws EmptyResponse.
PromptSet parse_llm_response(std::string_view raw, const Label& label, int expected);

class NoSubjectFound : public Error {
 public:
  explicit NoSubjectFound(const std::string& caption)
      : Error("no coarse subject found in caption '" + caption + "'") {}
};

/// Replaces the earliest whole-word, case-insensitive coarse subject (longer subject wins a
/// tie) with the label name. Throws NoSubjectFound.
Prompt caption_replace(std::string_view caption, const std::vector<std::string>& coarse_subjects,
                       const Label& label);

struct CaptionLine {
  std::string caption;
  std::optional<std::string> image;
};

/// One caption per line, optionally followed by a tab and an image filename. Blank lines skipped.
std::vector<CaptionLine> read_captions(const std::filesystem::path& path);

/// Captions whose image filename names the label ("Yorkshire_Terrier_12.jpg" for
/// "yorkshire-terrier"; case, '-', '_' and ' ' are interchangeable). Falls back to every
/// caption when none match.
std::vector<CaptionLine> captions_for_label(const std::vector<CaptionLine>& captions, const Label& label);

/// Replaces subjects in every caption, skipping captions without one and duplicate results.
/// Returns up to `limit` prompts; throws NoSubjectFound if none qualify.
PromptSet caption_prompts(const std::vector<CaptionLine>& captions,
                          const std::vector<std::string>& coarse_subjects, const Label& label,
                          int limit);

struct AnimacyLexicon {
  std::vector<std::string> living_words{"animate", "animal", "plant"};
  std::vector<std::string> nonliving_words{"inanimate", "object", "man-made"};
  std::vector<std::string> living_modifiers{"female", "young", "sick"};
  std::vector<std::string> nonliving_modifiers{"broken", "red"};

  /// Empty when all lists are non-empty and the living/non-living word lists are disjoint.
  std::vector<std::string> problems() const;
  /// JSON object with the four list fields; missing fields keep their defaults.
  static AnimacyLexicon load(const std::filesystem::path& path);
};

enum class Animacy { Living, NonLiving };

std::string_view to_string(Animacy a) noexcept;

struct AnimacyScores {
  double living_mean = 0.0;
  double nonliving_mean = 0.0;
  Animacy decision = Animacy::NonLiving;
};

/// Averages label-to-word cosines over each word list independently and calls the label
/// Living only when the living average is strictly larger.
AnimacyScores animacy_scores(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label);
Animacy classify_animacy(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label);

/// One prompt per modifier of the label's animacy branch. With a base prompt the label name
/// inside it becomes "<modifier> <name>"; without one the bare phrase is emitted.
PromptSet diversify(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label,
                    const std::optional<Prompt>& base = std::nullopt);

/// Inserts `modifier` before the first case-insensitive occurrence of the label name.
/// Returns nullopt when the text does not mention the label.
std::optional<std::string> modify_label_in(std::string_view text, const Label& label,
                                           std::string_view modifier);

}  // namespace dsforge
