#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dsforge/core.hpp"
#include "dsforge/embeddings.hpp"
#include "dsforge/error.hpp"
#include "dsforge/genclient.hpp"
#include "dsforge/llm.hpp"
#include "dsforge/noise.hpp"
#include "dsforge/prompt.hpp"

namespace dsforge {

inline constexpr std::string_view kManifestFile = "dataset.manifest.json";
inline constexpr std::string_view kErrorLogFile = "errors.jsonl";

/// Thrown when the config is invalid; carries every validation message.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class PipelineError : public Error {
 public:
  using Error::Error;
};

class Cancelled : public Error {
 public:
  Cancelled() : Error("formulation cancelled") {}
};

/// One line of the newline-delimited JSON error log.
struct ErrorRecord {
  std::string class_name;
  std::optional<int> prompt_idx;
  std::optional<int> image_idx;
  std::string error_kind;
  std::string message;
};

std::string error_record_to_json(const ErrorRecord& r);
std::vector<ErrorRecord> read_error_log(const std::filesystem::path& path);

/// seed = hash64(base seed, class index, prompt index, image index)
std::uint64_t derive_image_seed(std::uint64_t base, std::size_t class_idx, std::size_t prompt_idx,
                                std::size_t image_idx) noexcept;

struct PromptPlan {
  /// Exactly prompts_per_class entries; may repeat texts when the strategy under-delivers.
  std::vector<Prompt> prompts;
  std::vector<ErrorRecord> notes;
};

struct FormulateOptions {
  /// Regenerate only the image slots recorded in this error log, merging into the existing manifest.
  std::optional<std::filesystem::path> retry_failed;
  const std::atomic<bool>* cancel = nullptr;
};

struct FormulationResult {
  DatasetManifest manifest;
  std::filesystem::path manifest_path;
  std::filesystem::path error_log_path;
  std::size_t failures = 0;  // image slots that failed
  std::vector<ErrorRecord> errors;
};

class Pipeline {
 public:
  /// Throws ConfigError unless validate_config(cfg) is empty. Backends default to the ones
  /// the config selects and are created lazily.
  explicit Pipeline(FormulationConfig cfg, std::shared_ptr<ImageBackend> images = nullptr,
                    std::shared_ptr<LlmBackend> llm = nullptr);

  const FormulationConfig& config() const noexcept { return cfg_; }

  /// prompts_per_class prompts for one label following the configured strategy.
  PromptPlan plan_prompts(const Label& label);

  FormulationResult formulate(const std::filesystem::path& output_dir, const FormulateOptions& opts = {});

 private:
  ImageBackend& image_backend();
  LlmBackend& llm_backend();
  const WordVectorStore* vectors();
  const AnimacyLexicon& lexicon();

  FormulationConfig cfg_;
  std::shared_ptr<ImageBackend> images_;
  std::shared_ptr<LlmBackend> llm_;
  std::optional<WordVectorStore> vectors_;
  std::optional<AnimacyLexicon> lexicon_;
  std::optional<std::vector<CaptionLine>> captions_;
};

/// Convenience wrapper: Pipeline(cfg).formulate(output_dir).manifest
DatasetManifest formulate(const FormulationConfig& cfg, const std::filesystem::path& output_dir);

struct PostprocessResult {
  std::size_t written = 0;
  std::vector<std::string> warnings;
};

/// Re-emits every image under input_dir/<class>/ as PNG under output_dir/<class>/ with the
/// noise applied. Each image's seed is hash64(spec.seed, hash64(relative path)).
PostprocessResult postprocess_dataset(const std::filesystem::path& input_dir, const NoiseSpec& spec,
                                      const std::filesystem::path& output_dir);

}  // namespace dsforge
