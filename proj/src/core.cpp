#include "dsforge/core.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dsforge/error.hpp"
#include "dsforge/json_io.hpp"

namespace dsforge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T get_as(const Json& j, const char* key, std::string_view context) {
  const Json& v = require_field(j, key, context);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string(context) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw SchemaError(std::string("config: field '") + key + "' has the wrong type");
    }
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Label / Prompt / PromptSet

std::vector<std::string> Label::problems() const {
  std::vector<std::string> out;
  const std::string t = trim(name);
  if (t.empty()) out.push_back("label name must be non-empty");
  if (name.find('/') != std::string::npos || name.find('\\') != std::string::npos)
    out.push_back("label name '" + name + "' must not contain a path separator");
  if (t == "." || t == "..") out.push_back("label name must not be '.' or '..'");
  return out;
}

Label Label::make(std::string name, std::optional<std::string> context) {
  Label l{std::move(name), std::move(context)};
  if (l.context && trim(*l.context).empty()) l.context.reset();
  if (auto p = l.problems(); !p.empty()) throw InvalidArgument(p.front());
  return l;
}

std::string_view to_string(PromptSource source) noexcept {
  switch (source) {
    case PromptSource::Naive: return "naive";
    case PromptSource::Llm: return "llm";
    case PromptSource::Caption: return "caption";
    case PromptSource::Diversified: return "diversified";
  }
  return "naive";
}

std::optional<PromptSource> parse_prompt_source(std::string_view s) noexcept {
  for (auto src : {PromptSource::Naive, PromptSource::Llm, PromptSource::Caption,
                   PromptSource::Diversified})
    if (to_string(src) == s) return src;
  return std::nullopt;
}

Prompt Prompt::make(std::string text, Label label, PromptSource source) {
  if (text.empty()) throw InvalidArgument("prompt text must be non-empty");
  if (source != PromptSource::Llm && text.find(label.name) == std::string::npos)
    throw InvalidArgument("prompt '" + text + "' does not mention label '" + label.name + "'");
  return Prompt{std::move(text), std::move(label), source};
}

PromptSet::PromptSet(Label label, std::vector<Prompt> prompts)
    : label_(std::move(label)), prompts_(std::move(prompts)) {
  if (prompts_.empty()) throw InvalidArgument("prompt set for '" + label_.name + "' is empty");
  std::unordered_set<std::string> seen;
  for (const auto& p : prompts_) {
    if (p.label != label_)
      throw InvalidArgument("prompt '" + p.text + "' belongs to label '" + p.label.name + "'");
    if (!seen.insert(p.text).second) throw InvalidArgument("duplicate prompt '" + p.text + "'");
  }
}

std::size_t DatasetManifest::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.images.size();
  return n;
}

std::string rfc3339_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON bindings

const Json& require_field(const Json& j, const char* key, std::string_view context) {
  if (!j.is_object()) throw SchemaError(std::string(context) + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string(context) + ": missing field '" + key + "'");
  return *it;
}

void to_json(Json& j, const Label& v) {
  j = Json{{"name", v.name}, {"context", v.context ? Json(*v.context) : Json(nullptr)}};
}

void from_json(const Json& j, Label& v) {
  v.name = get_as<std::string>(j, "name", "label");
  v.context.reset();
  if (auto it = j.find("context"); it != j.end() && !it->is_null()) v.context = it->get<std::string>();
  if (auto p = v.problems(); !p.empty()) throw SchemaError("label: " + p.front());
}

void to_json(Json& j, const Prompt& v) {
  j = Json{{"text", v.text}, {"label", v.label}, {"source", to_string(v.source)}};
}

void from_json(const Json& j, Prompt& v) {
  v.text = get_as<std::string>(j, "text", "prompt");
  v.label = require_field(j, "label", "prompt").get<Label>();
  const auto src = get_as<std::string>(j, "source", "prompt");
  auto parsed = parse_prompt_source(src);
  if (!parsed) throw SchemaError("prompt: unknown source '" + src + "'");
  v.source = *parsed;
  if (v.text.empty()) throw SchemaError("prompt: text must be non-empty");
}

void to_json(Json& j, const NoiseSpec& v) {
  j = Json{{"kind", to_string(v.kind())}, {"seed", v.seed}};
  std::visit(
      [&j](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GaussianBlurParams>) {
          j["kernel_size"] = p.kernel_size;
          j["sigma"] = p.sigma;
        } else if constexpr (std::is_same_v<P, GaussianNoiseParams>) {
          j["mean"] = p.mean;
          j["variance"] = p.variance;
        } else if constexpr (std::is_same_v<P, LocalvarNoiseParams>) {
          j["variance"] = p.variance;
          if (!p.map_path.empty()) {
            j["map_path"] = p.map_path;
          } else if (p.map) {
            j["variance_map"] = Json{{"width", p.map->width}, {"height", p.map->height},
                                     {"values", p.map->values}};
          }
        } else if constexpr (std::is_same_v<P, SaltParams> || std::is_same_v<P, PepperParams>) {
          j["amount"] = p.amount;
        } else if constexpr (std::is_same_v<P, SaltAndPepperParams>) {
          j["amount"] = p.amount;
          j["salt_fraction"] = p.salt_fraction;
        } else if constexpr (std::is_same_v<P, SpeckleParams>) {
          j["variance"] = p.variance;
        }
      },
      v.params);
}

NoiseSpec noise_spec_from_json(const Json& j, const std::filesystem::path& base_dir) {
  const auto kind_name = get_as<std::string>(j, "kind", "noise");
  auto kind = parse_noise_kind(kind_name);
  if (!kind) throw SchemaError("noise: unknown kind '" + kind_name + "'");
  std::uint64_t seed = 0;
  if (auto it = j.find("seed"); it != j.end()) seed = it->get<std::uint64_t>();
  NoiseSpec spec = NoiseSpec::defaults(*kind, seed);
  auto num = [&j](const char* key, auto& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
      if (!it->is_number()) throw SchemaError(std::string("noise: field '") + key + "' must be a number");
      out = it->get<std::decay_t<decltype(out)>>();
    }
  };
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GaussianBlurParams>) {
          num("kernel_size", p.kernel_size);
          num("sigma", p.sigma);
        } else if constexpr (std::is_same_v<P, GaussianNoiseParams>) {
          num("mean", p.mean);
          num("variance", p.variance);
        } else if constexpr (std::is_same_v<P, LocalvarNoiseParams>) {
          num("variance", p.variance);
          if (auto it = j.find("map_path"); it != j.end() && !it->is_null()) {
            p.map_path = resolve(base_dir, it->get<std::string>());
          } else if (auto m = j.find("variance_map"); m != j.end() && !m->is_null()) {
            auto map = std::make_shared<VarianceMap>();
            map->width = get_as<int>(*m, "width", "variance_map");
            map->height = get_as<int>(*m, "height", "variance_map");
            map->values = get_as<std::vector<double>>(*m, "values", "variance_map");
            p.map = std::move(map);
          }
        } else if constexpr (std::is_same_v<P, SaltParams> || std::is_same_v<P, PepperParams>) {
          num("amount", p.amount);
        } else if constexpr (std::is_same_v<P, SaltAndPepperParams>) {
          num("amount", p.amount);
          num("salt_fraction", p.salt_fraction);
        } else if constexpr (std::is_same_v<P, SpeckleParams>) {
          num("variance", p.variance);
        }
      },
      spec.params);
  return spec;
}

void from_json(const Json& j, NoiseSpec& v) { v = noise_spec_from_json(j, {}); }

void to_json(Json& j, const ImageEntry& v) {
  j = Json{{"path", v.path},
           {"prompt", v.prompt},
           {"seed", v.seed},
           {"postprocess", v.postprocess ? Json(*v.postprocess) : Json(nullptr)}};
}

void from_json(const Json& j, ImageEntry& v) {
  v.path = get_as<std::string>(j, "path", "image");
  v.prompt = require_field(j, "prompt", "image '" + v.path + "'").get<Prompt>();
  v.seed = get_as<std::uint64_t>(j, "seed", "image '" + v.path + "'");
  const Json& pp = require_field(j, "postprocess", "image '" + v.path + "'");
  v.postprocess.reset();
  if (!pp.is_null()) v.postprocess = pp.get<NoiseSpec>();
}

void to_json(Json& j, const ClassEntry& v) { j = Json{{"label", v.label}, {"images", v.images}}; }

void from_json(const Json& j, ClassEntry& v) {
  v.label = require_field(j, "label", "class").get<Label>();
  v.images = require_field(j, "images", "class '" + v.label.name + "'").get<std::vector<ImageEntry>>();
}

void to_json(Json& j, const DatasetManifest& v) {
  j = Json{{"classes", v.classes},
           {"created_at", v.created_at},
           {"generator", v.generator},
           {"image_size", Json{{"width", v.image_size.width}, {"height", v.image_size.height}}}};
}

void from_json(const Json& j, DatasetManifest& v) {
  v.classes = require_field(j, "classes", "manifest").get<std::vector<ClassEntry>>();
  v.created_at = get_as<std::string>(j, "created_at", "manifest");
  v.generator = get_as<std::string>(j, "generator", "manifest");
  const Json& size = require_field(j, "image_size", "manifest");
  v.image_size.width = get_as<int>(size, "width", "image_size");
  v.image_size.height = get_as<int>(size, "height", "image_size");
}

Json prompt_set_to_json(const PromptSet& set) {
  Json texts = Json::array();
  Json sources = Json::array();
  for (const auto& p : set.prompts()) {
    texts.push_back(p.text);
    sources.push_back(to_string(p.source));
  }
  return Json{{"label", set.label()}, {"prompts", texts}, {"sources", sources}};
}

PromptSet prompt_set_from_json(const Json& j) {
  Label label = require_field(j, "label", "prompt_set").get<Label>();
  const auto texts = get_as<std::vector<std::string>>(j, "prompts", "prompt_set");
  std::vector<std::string> sources;
  if (j.contains("sources")) sources = j.at("sources").get<std::vector<std::string>>();
  std::vector<Prompt> prompts;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    PromptSource src = PromptSource::Llm;
    if (i < sources.size()) {
      auto s = parse_prompt_source(sources[i]);
      if (!s) throw SchemaError("prompt_set: unknown source '" + sources[i] + "'");
      src = *s;
    }
    prompts.push_back(Prompt{texts[i], label, src});
  }
  try {
    return PromptSet(label, std::move(prompts));
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("prompt_set: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Manifest file

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  const Json j = m;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move manifest into place at '" + path.string() + "': " + ec.message());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    m = j.get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest '" + path.string() + "': " + e.what());
  }
  std::set<std::string> paths;
  for (const auto& c : m.classes) {
    for (const auto& img : c.images) {
      if (!paths.insert(img.path).second)
        throw SchemaError("manifest '" + path.string() + "': duplicate image path '" + img.path + "'");
      if (img.prompt.label != c.label)
        throw SchemaError("manifest '" + path.string() + "': image '" + img.path +
                          "' has a prompt for label '" + img.prompt.label.name + "'");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(PromptStrategy s) noexcept {
  switch (s) {
    case PromptStrategy::Naive: return "naive";
    case PromptStrategy::Llm: return "llm";
    case PromptStrategy::Caption: return "caption";
  }
  return "naive";
}

std::string_view to_string(BackendKind b) noexcept {
  return b == BackendKind::Mock ? "mock" : "http";
}

std::vector<std::string> validate_config(const FormulationConfig& cfg) {
  std::vector<std::string> errs;
  if (cfg.labels.empty()) errs.emplace_back("labels must not be empty");
  std::set<std::string> names;
  for (const auto& l : cfg.labels) {
    for (auto& p : l.problems()) errs.push_back(std::move(p));
    if (!names.insert(l.name).second) errs.push_back("duplicate label '" + l.name + "'");
  }
  if (cfg.prompts_per_class < 1) errs.emplace_back("prompts_per_class must be ≥ 1");
  if (cfg.images_per_prompt < 1) errs.emplace_back("images_per_prompt must be ≥ 1");
  if (cfg.output_size < 1) errs.emplace_back("output_size must be ≥ 1");
  if (cfg.resolution < cfg.output_size) errs.emplace_back("resolution must be ≥ output_size");
  if (cfg.resolution < 64 || cfg.resolution % 8 != 0)
    errs.emplace_back("resolution must be ≥ 64 and a multiple of 8");
  if (cfg.max_in_flight < 1) errs.emplace_back("max_in_flight must be ≥ 1");
  if (cfg.noise)
    for (auto& e : cfg.noise->validate()) errs.push_back("noise: " + e);
  if (cfg.backend == BackendKind::Http && cfg.http.endpoint.empty())
    errs.emplace_back("http backend requires http.endpoint");
  if (cfg.strategy == PromptStrategy::Llm) {
    if (cfg.llm.kind == "fixture") {
      if (cfg.llm.fixture_path.empty()) errs.emplace_back("llm fixture backend requires llm.fixture_path");
    } else if (cfg.llm.kind == "http") {
      if (cfg.llm.endpoint.empty()) errs.emplace_back("llm http backend requires llm.endpoint");
    } else {
      errs.push_back("llm.kind must be 'fixture' or 'http', got '" + cfg.llm.kind + "'");
    }
    if (cfg.llm.max_in_flight < 1) errs.emplace_back("llm.max_in_flight must be ≥ 1");
    if (!cfg.llm.query_template.empty()) {
      const auto first = cfg.llm.query_template.find("{class}");
      if (first == std::string::npos ||
          cfg.llm.query_template.find("{class}", first + 1) != std::string::npos)
        errs.emplace_back("llm.query_template must contain {class} exactly once");
    }
  }
  if (cfg.strategy == PromptStrategy::Caption) {
    if (cfg.captions_path.empty()) errs.emplace_back("caption strategy requires captions_path");
    if (cfg.coarse_subjects.empty()) errs.emplace_back("caption strategy requires coarse_subjects");
  }
  if (cfg.diversify && cfg.vectors_path.empty()) errs.emplace_back("diversify requires vectors_path");
  return errs;
}

FormulationConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("config: expected an object");
  FormulationConfig cfg;
  const Json& labels = require_field(j, "labels", "config");
  if (!labels.is_array()) throw SchemaError("config: 'labels' must be an array");
  for (const auto& l : labels) {
    // Bare strings are accepted as context-free labels.
    if (l.is_string()) cfg.labels.push_back(Label{l.get<std::string>(), std::nullopt});
    else cfg.labels.push_back(l.get<Label>());
  }
  read_opt(j, "prompts_per_class", cfg.prompts_per_class);
  read_opt(j, "images_per_prompt", cfg.images_per_prompt);
  read_opt(j, "resolution", cfg.resolution);
  read_opt(j, "output_size", cfg.output_size);
  read_opt(j, "seed", cfg.seed);
  read_opt(j, "diversify", cfg.diversify);
  read_opt(j, "vectors_path", cfg.vectors_path);
  read_opt(j, "lexicon_path", cfg.lexicon_path);
  read_opt(j, "captions_path", cfg.captions_path);
  read_opt(j, "coarse_subjects", cfg.coarse_subjects);
  read_opt(j, "max_in_flight", cfg.max_in_flight);
  cfg.vectors_path = resolve(base_dir, cfg.vectors_path);
  cfg.lexicon_path = resolve(base_dir, cfg.lexicon_path);
  cfg.captions_path = resolve(base_dir, cfg.captions_path);
  if (auto it = j.find("noise"); it != j.end() && !it->is_null())
    cfg.noise = noise_spec_from_json(*it, base_dir);
  if (auto it = j.find("backend"); it != j.end()) {
    const auto b = it->get<std::string>();
    if (b == "mock") cfg.backend = BackendKind::Mock;
    else if (b == "http") cfg.backend = BackendKind::Http;
    else throw SchemaError("config: unknown backend '" + b + "'");
  }
  if (auto it = j.find("strategy"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "naive") cfg.strategy = PromptStrategy::Naive;
    else if (s == "llm") cfg.strategy = PromptStrategy::Llm;
    else if (s == "caption") cfg.strategy = PromptStrategy::Caption;
    else throw SchemaError("config: unknown strategy '" + s + "'");
  }
  if (auto it = j.find("llm"); it != j.end() && it->is_object()) {
    read_opt(*it, "kind", cfg.llm.kind);
    read_opt(*it, "fixture_path", cfg.llm.fixture_path);
    read_opt(*it, "endpoint", cfg.llm.endpoint);
    read_opt(*it, "model", cfg.llm.model);
    read_opt(*it, "api_key_env", cfg.llm.api_key_env);
    read_opt(*it, "query_template", cfg.llm.query_template);
    read_opt(*it, "max_in_flight", cfg.llm.max_in_flight);
    cfg.llm.fixture_path = resolve(base_dir, cfg.llm.fixture_path);
  }
  if (auto it = j.find("http"); it != j.end() && it->is_object()) {
    read_opt(*it, "endpoint", cfg.http.endpoint);
    read_opt(*it, "api_key_env", cfg.http.api_key_env);
    read_opt(*it, "timeout_seconds", cfg.http.timeout_seconds);
    if (auto e = it->find("extra"); e != it->end()) {
      if (!e->is_object()) throw SchemaError("config: 'http.extra' must be an object");
      cfg.http.extra_json = e->dump();
    }
  }
  return cfg;
}

FormulationConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

std::string config_to_json(const FormulationConfig& cfg) {
  Json j{{"labels", cfg.labels},
         {"prompts_per_class", cfg.prompts_per_class},
         {"images_per_prompt", cfg.images_per_prompt},
         {"resolution", cfg.resolution},
         {"output_size", cfg.output_size},
         {"noise", cfg.noise ? Json(*cfg.noise) : Json(nullptr)},
         {"backend", to_string(cfg.backend)},
         {"seed", cfg.seed},
         {"strategy", to_string(cfg.strategy)},
         {"diversify", cfg.diversify},
         {"vectors_path", cfg.vectors_path},
         {"lexicon_path", cfg.lexicon_path},
         {"captions_path", cfg.captions_path},
         {"coarse_subjects", cfg.coarse_subjects},
         {"max_in_flight", cfg.max_in_flight},
         {"llm", Json{{"kind", cfg.llm.kind},
                      {"fixture_path", cfg.llm.fixture_path},
                      {"endpoint", cfg.llm.endpoint},
                      {"model", cfg.llm.model},
                      {"api_key_env", cfg.llm.api_key_env},
                      {"query_template", cfg.llm.query_template},
                      {"max_in_flight", cfg.llm.max_in_flight}}},
         {"http", Json{{"endpoint", cfg.http.endpoint},
                       {"api_key_env", cfg.http.api_key_env},
                       {"timeout_seconds", cfg.http.timeout_seconds},
                       {"extra", Json::parse(cfg.http.extra_json)}}}};
  return j.dump(2);
}

}  // namespace dsforge
