#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsforge/noise.hpp"

namespace dsforge {

/// Class name plus optional disambiguating context word ("boxer" + "pet").
struct Label {
  std::string name;
  std::optional<std::string> context;

  /// Throws InvalidArgument on an empty name or one containing a path separator.
  static Label make(std::string name, std::optional<std::string> context = std::nullopt);
  /// Empty when the invariants hold.
  std::vector<std::string> problems() const;

  bool operator==(const Label&) const = default;
};

enum class PromptSource { Naive, Llm, Caption, Diversified };

std::string_view to_string(PromptSource source) noexcept;
std::optional<PromptSource> parse_prompt_source(std::string_view s) noexcept;

struct Prompt {
  std::string text;
  Label label;
  PromptSource source = PromptSource::Naive;

  /// Throws InvalidArgument on empty text, or when a templated source lacks the label name.
  static Prompt make(std::string text, Label label, PromptSource source);

  bool operator==(const Prompt&) const = default;
};

/// Non-empty ordered list of distinct prompts for one label.
class PromptSet {
 public:
  PromptSet(Label label, std::vector<Prompt> prompts);

  const Label& label() const noexcept { return label_; }
  const std::vector<Prompt>& prompts() const noexcept { return prompts_; }
  std::size_t size() const noexcept { return prompts_.size(); }

  bool operator==(const PromptSet&) const = default;

 private:
  Label label_;
  std::vector<Prompt> prompts_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

struct ImageEntry {
  std::string path;  // relative to the dataset root, '/' separated
  Prompt prompt;
  std::uint64_t seed = 0;
  std::optional<NoiseSpec> postprocess;
  bool operator==(const ImageEntry&) const = default;
};

struct ClassEntry {
  Label label;
  std::vector<ImageEntry> images;
  bool operator==(const ClassEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ClassEntry> classes;
  std::string created_at;  // RFC 3339 UTC
  std::string generator;
  ImageSize image_size;

  std::size_t image_count() const noexcept;
  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr std::string_view kManifestExtension = ".manifest.json";

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string rfc3339_now();

/// Serializes atomically (temp file + rename). Throws IoError.
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
/// Throws IoError if unreadable, SchemaError on missing fields, duplicate paths,
/// or a prompt label that differs from its class label.
DatasetManifest read_manifest(const std::filesystem::path& path);

enum class PromptStrategy { Naive, Llm, Caption };
enum class BackendKind { Mock, Http };

std::string_view to_string(PromptStrategy s) noexcept;
std::string_view to_string(BackendKind b) noexcept;

struct LlmSettings {
  /// "fixture" replays recorded responses; "http" talks to a chat-completion endpoint.
  std::string kind = "fixture";
  std::string fixture_path;
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "DSFORGE_LLM_API_KEY";
  std::string query_template;  // empty = built-in query
  int max_in_flight = 2;
  bool operator==(const LlmSettings&) const = default;
};

struct HttpGenSettings {
  std::string endpoint;
  std::string api_key_env = "DSFORGE_TXT2IMG_API_KEY";
  double timeout_seconds = 120.0;
  /// Extra JSON object merged into every request body (steps, guidance, ...).
  std::string extra_json = "{}";
  bool operator==(const HttpGenSettings&) const = default;
};

struct FormulationConfig {
  std::vector<Label> labels;
  int prompts_per_class = 10;
  int images_per_prompt = 18;
  int resolution = 768;
  int output_size = 224;
  std::optional<NoiseSpec> noise;
  BackendKind backend = BackendKind::Mock;
  std::uint64_t seed = 0;

  PromptStrategy strategy = PromptStrategy::Naive;
  bool diversify = false;
  std::string vectors_path;
  std::string lexicon_path;
  std::string captions_path;
  std::vector<std::string> coarse_subjects{"dog", "cat", "food", "object"};
  LlmSettings llm;
  HttpGenSettings http;
  int max_in_flight = 8;

  bool operator==(const FormulationConfig&) const = default;
};

/// One message per violated invariant; empty iff the config can drive a pipeline.
std::vector<std::string> validate_config(const FormulationConfig& cfg);

/// Relative paths inside the config are resolved against `base_dir`.
FormulationConfig read_config(const std::filesystem::path& path);
FormulationConfig parse_config(std::string_view json_text,
                               const std::filesystem::path& base_dir = {});
std::string config_to_json(const FormulationConfig& cfg);

}  // namespace dsforge
