#include "dsforge/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_set>

#include "dsforge/json_io.hpp"
#include "dsforge/rng.hpp"

namespace dsforge {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string image_name(int prompt_idx, int image_idx) {
  return std::to_string(prompt_idx) + "_" + std::to_string(image_idx) + ".png";
}

// "<p>_<i>.png" -> (p, i)
std::optional<std::pair<int, int>> parse_image_name(std::string_view name) {
  const auto us = name.find('_');
  const auto dot = name.rfind('.');
  if (us == std::string_view::npos || dot == std::string_view::npos || dot < us) return std::nullopt;
  int p = 0, i = 0;
  if (std::from_chars(name.data(), name.data() + us, p).ec != std::errc()) return std::nullopt;
  if (std::from_chars(name.data() + us + 1, name.data() + dot, i).ec != std::errc()) return std::nullopt;
  return std::pair{p, i};
}

void write_error_log(const fs::path& path, const std::vector<ErrorRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open error log '" + path.string() + "'");
  for (const auto& r : records) out << error_record_to_json(r) << '\n';
}

std::string clip(std::string s, std::size_t n = 500) {
  if (s.size() > n) s = s.substr(0, n) + "...";
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error("invalid configuration: " + join(problems, "; ")), problems_(std::move(problems)) {}

std::string error_record_to_json(const ErrorRecord& r) {
  const Json j{{"class", r.class_name},
               {"prompt_idx", r.prompt_idx ? Json(*r.prompt_idx) : Json(nullptr)},
               {"image_idx", r.image_idx ? Json(*r.image_idx) : Json(nullptr)},
               {"error_kind", r.error_kind},
               {"message", r.message}};
  return j.dump();
}

std::vector<ErrorRecord> read_error_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open error log '" + path.string() + "'");
  std::vector<ErrorRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      ErrorRecord r;
      r.class_name = j.at("class").get<std::string>();
      if (!j.at("prompt_idx").is_null()) r.prompt_idx = j.at("prompt_idx").get<int>();
      if (!j.at("image_idx").is_null()) r.image_idx = j.at("image_idx").get<int>();
      r.error_kind = j.at("error_kind").get<std::string>();
      r.message = j.at("message").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("error log '" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::uint64_t derive_image_seed(std::uint64_t base, std::size_t class_idx, std::size_t prompt_idx,
                                std::size_t image_idx) noexcept {
  return hash64({base, class_idx, prompt_idx, image_idx});
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(FormulationConfig cfg, std::shared_ptr<ImageBackend> images, std::shared_ptr<LlmBackend> llm)
    : cfg_(std::move(cfg)), images_(std::move(images)), llm_(std::move(llm)) {
  if (auto problems = validate_config(cfg_); !problems.empty()) throw ConfigError(std::move(problems));
}

ImageBackend& Pipeline::image_backend() {
  if (!images_) images_ = make_image_backend(cfg_);
  return *images_;
}

LlmBackend& Pipeline::llm_backend() {
  if (!llm_) llm_ = make_llm_backend(cfg_.llm);
  return *llm_;
}

const WordVectorStore* Pipeline::vectors() {
  if (cfg_.vectors_path.empty()) return nullptr;
  if (!vectors_) vectors_ = WordVectorStore::load(cfg_.vectors_path);
  return &*vectors_;
}

const AnimacyLexicon& Pipeline::lexicon() {
  if (!lexicon_) lexicon_ = cfg_.lexicon_path.empty() ? AnimacyLexicon{} : AnimacyLexicon::load(cfg_.lexicon_path);
  return *lexicon_;
}

PromptPlan Pipeline::plan_prompts(const Label& label) {
  const auto want = static_cast<std::size_t>(cfg_.prompts_per_class);
  PromptPlan plan;
  auto note = [&](std::string kind, std::string msg) {
    plan.notes.push_back(ErrorRecord{label.name, std::nullopt, std::nullopt, std::move(kind), std::move(msg)});
  };

  std::vector<Prompt> base;
  switch (cfg_.strategy) {
    case PromptStrategy::Naive:
      base.push_back(naive_prompt(label));
      break;
    case PromptStrategy::Llm: {
      LlmQuery q;
      if (!cfg_.llm.query_template.empty()) q.query_template = cfg_.llm.query_template;
      q.count = cfg_.prompts_per_class;
      try {
        const auto raw = llm_backend().complete(build_llm_query(label, q));
        base = parse_llm_response(raw, label, cfg_.prompts_per_class).prompts();
      } catch (const EmptyResponse& e) {
        note("llm_empty_response", clip(e.raw()));
      } catch (const LlmError& e) {
        note("llm_error", e.what());
      }
      break;
    }
    case PromptStrategy::Caption: {
      if (!captions_) captions_ = read_captions(cfg_.captions_path);
      try {
        base = caption_prompts(captions_for_label(*captions_, label), cfg_.coarse_subjects, label, cfg_.prompts_per_class).prompts();
      } catch (const NoSubjectFound& e) {
        note("no_subject_found", e.what());
      }
      break;
    }
  }
  if (base.empty()) base.push_back(naive_prompt(label));

  if (cfg_.diversify) {
    const auto* store = vectors();
    const auto& lex = lexicon();
    const Animacy a = classify_animacy(*store, lex, label);
    const auto& mods = a == Animacy::Living ? lex.living_modifiers : lex.nonliving_modifiers;
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (auto t = modify_label_in(base[i].text, label, mods[i % mods.size()]))
        base[i] = Prompt{std::move(*t), label, PromptSource::Diversified};
    }
  }

  std::vector<Prompt> prompts;
  std::unordered_set<std::string> seen;
  for (auto& p : base)
    if (prompts.size() < want && seen.insert(p.text).second) prompts.push_back(std::move(p));

  if (prompts.size() < want) {
    const std::size_t produced = prompts.size();
    std::size_t padded = 0;
    if (const auto* store = vectors()) {
      const auto variants = diversify(*store, lexicon(), label, naive_prompt(label));
      for (const auto& p : variants.prompts()) {
        if (prompts.size() >= want) break;
        if (seen.insert(p.text).second) {
          prompts.push_back(p);
          ++padded;
        }
      }
    }
    const std::size_t distinct = prompts.size();
    for (std::size_t k = 0; prompts.size() < want; ++k) {
      Prompt again = prompts[k % distinct];
      prompts.push_back(std::move(again));
    }
    note("prompt_shortfall", "strategy '" + std::string(to_string(cfg_.strategy)) + "' produced " +
                                 std::to_string(produced) + " distinct prompt(s) of " + std::to_string(want) +
                                 "; added " + std::to_string(padded) + " diversified variant(s); " +
                                 std::to_string(want - distinct) + " slot(s) reuse earlier prompts");
  }
  plan.prompts = std::move(prompts);
  return plan;
}

FormulationResult Pipeline::formulate(const fs::path& output_dir, const FormulateOptions& opts) {
  fs::create_directories(output_dir);
  FormulationResult result;
  result.manifest_path = output_dir / kManifestFile;
  result.error_log_path = output_dir / kErrorLogFile;

  // Slots to (re)generate when retrying; existing entries are kept.
  std::optional<std::set<std::tuple<std::string, int, int>>> only;
  std::vector<std::map<std::pair<int, int>, ImageEntry>> entries(cfg_.labels.size());
  if (opts.retry_failed) {
    only.emplace();
    for (const auto& r : read_error_log(*opts.retry_failed))
      if (r.prompt_idx && r.image_idx) only->emplace(r.class_name, *r.prompt_idx, *r.image_idx);
    if (fs::exists(result.manifest_path)) {
      const auto prev = read_manifest(result.manifest_path);
      for (const auto& c : prev.classes) {
        const auto it = std::find_if(cfg_.labels.begin(), cfg_.labels.end(),
                                     [&](const Label& l) { return l.name == c.label.name; });
        if (it == cfg_.labels.end()) continue;
        const auto ci = static_cast<std::size_t>(it - cfg_.labels.begin());
        for (const auto& e : c.images)
          if (auto key = parse_image_name(fs::path(e.path).filename().string())) entries[ci][*key] = e;
      }
    }
  }

  struct Slot {
    std::size_t class_idx;
    int prompt_idx, image_idx;
  };
  std::vector<Slot> slots;
  std::vector<std::vector<Prompt>> prompts(cfg_.labels.size());
  for (std::size_t ci = 0; ci < cfg_.labels.size(); ++ci) {
    const Label& label = cfg_.labels[ci];
    fs::create_directories(output_dir / label.name);
    auto plan = plan_prompts(label);
    for (auto& n : plan.notes) result.errors.push_back(std::move(n));
    prompts[ci] = std::move(plan.prompts);
    for (int p = 0; p < cfg_.prompts_per_class; ++p)
      for (int i = 0; i < cfg_.images_per_prompt; ++i)
        if (!only || only->count({label.name, p, i})) slots.push_back({ci, p, i});
  }

  auto& backend = image_backend();
  const std::size_t chunk = static_cast<std::size_t>(std::max(cfg_.max_in_flight, 1)) * 4;
  for (std::size_t start = 0; start < slots.size(); start += chunk) {
    if (opts.cancel && opts.cancel->load()) {
      write_error_log(result.error_log_path, result.errors);
      throw Cancelled();
    }
    const std::size_t end = std::min(slots.size(), start + chunk);
    std::vector<GenRequest> reqs;
    for (std::size_t s = start; s < end; ++s) {
      const auto& sl = slots[s];
      reqs.push_back(GenRequest{prompts[sl.class_idx][sl.prompt_idx], cfg_.resolution, cfg_.resolution,
                                derive_image_seed(cfg_.seed, sl.class_idx, sl.prompt_idx, sl.image_idx),
                                sl.image_idx});
    }
    auto results = generate_batch(backend, reqs, cfg_.max_in_flight);
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& sl = slots[start + k];
      const Label& label = cfg_.labels[sl.class_idx];
      auto& res = results[k];
      if (!res.ok()) {
        result.errors.push_back({label.name, sl.prompt_idx, sl.image_idx, std::string(to_string(res.error->kind())),
                                 res.error->what()});
        continue;
      }
      try {
        RasterImage img = square_fit(*res.image, cfg_.output_size);
        res.image.reset();
        std::optional<NoiseSpec> applied;
        if (cfg_.noise) {
          applied = *cfg_.noise;
          applied->seed = hash64({cfg_.noise->seed, res.request.seed});
          img = apply_noise(img, *applied);
        }
        const std::string rel = label.name + "/" + image_name(sl.prompt_idx, sl.image_idx);
        write_png(img, output_dir / rel);
        entries[sl.class_idx][{sl.prompt_idx, sl.image_idx}] =
            ImageEntry{rel, res.request.prompt, res.request.seed, applied};
      } catch (const Error& e) {
        result.errors.push_back({label.name, sl.prompt_idx, sl.image_idx, "io", e.what()});
      }
    }
  }

  for (const auto& r : result.errors)
    if (r.image_idx) ++result.failures;
  write_error_log(result.error_log_path, result.errors);

  std::vector<std::string> empty;
  for (std::size_t ci = 0; ci < cfg_.labels.size(); ++ci)
    if (entries[ci].empty()) empty.push_back(cfg_.labels[ci].name);
  if (!empty.empty())
    throw PipelineError("no images were generated for class(es): " + join(empty, ", ") + " (see " +
                        result.error_log_path.string() + ")");

  DatasetManifest& m = result.manifest;
  m.created_at = rfc3339_now();
  m.generator = backend.name();
  m.image_size = {cfg_.output_size, cfg_.output_size};
  for (std::size_t ci = 0; ci < cfg_.labels.size(); ++ci) {
    ClassEntry c{cfg_.labels[ci], {}};
    for (auto& [key, e] : entries[ci]) c.images.push_back(std::move(e));
    m.classes.push_back(std::move(c));
  }
  write_manifest(m, result.manifest_path);
  return result;
}

DatasetManifest formulate(const FormulationConfig& cfg, const fs::path& output_dir) {
  return Pipeline(cfg).formulate(output_dir).manifest;
}

// ---------------------------------------------------------------------------

PostprocessResult postprocess_dataset(const fs::path& input_dir, const NoiseSpec& spec, const fs::path& output_dir) {
  if (!fs::is_directory(input_dir)) throw IoError("input directory '" + input_dir.string() + "' does not exist");
  if (auto errs = spec.validate(); !errs.empty())
    throw InvalidArgument(std::string(to_string(spec.kind())) + ": " + errs.front());
  if (fs::exists(output_dir) && fs::equivalent(input_dir, output_dir))
    throw InvalidArgument("output directory must differ from the input directory");

  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(input_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());

  PostprocessResult result;
  std::map<std::string, std::string> renamed;  // input rel path -> output rel path
  for (const auto& d : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;
    fs::create_directories(output_dir / d.filename());
    std::set<std::string> written;
    for (const auto& f : files) {
      const std::string rel = f.lexically_relative(input_dir).generic_string();
      std::string out_rel = (d.filename() / f.stem()).generic_string() + ".png";
      if (!written.insert(out_rel).second) {
        result.warnings.push_back("skipping '" + rel + "': output '" + out_rel + "' already written");
        continue;
      }
      try {
        NoiseSpec s = spec;
        s.seed = hash64({spec.seed, hash64(rel)});
        write_png(apply_noise(read_image(f), s), output_dir / out_rel);
        renamed[rel] = out_rel;
        ++result.written;
      } catch (const Error& e) {
        result.warnings.push_back("skipping '" + rel + "': " + e.what());
      }
    }
  }

  // Carry a manifest along so it keeps matching the files on disk.
  const fs::path in_manifest = input_dir / kManifestFile;
  if (fs::exists(in_manifest)) {
    try {
      DatasetManifest m = read_manifest(in_manifest);
      for (auto& c : m.classes) {
        std::vector<ImageEntry> kept;
        for (auto& e : c.images) {
          auto it = renamed.find(e.path);
          if (it == renamed.end()) continue;
          e.path = it->second;
          e.postprocess = spec;
          e.postprocess->seed = hash64({spec.seed, hash64(it->first)});
          kept.push_back(std::move(e));
        }
        c.images = std::move(kept);
      }
      m.created_at = rfc3339_now();
      write_manifest(m, output_dir / kManifestFile);
    } catch (const Error& e) {
      result.warnings.push_back(std::string("manifest not carried over: ") + e.what());
    }
  }
  return result;
}

}  // namespace dsforge
