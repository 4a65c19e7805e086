// dsforge: command-line front end for prompt generation, dataset formulation,
// post-processing and diversity audits.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error, 3 partial success.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "dsforge/json_io.hpp"
#include "dsforge/metrics.hpp"
#include "dsforge/pipeline.hpp"

namespace {

using namespace dsforge;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kPartial = 3;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Label make_label(const std::string& name, const std::string& context) {
  try {
    return Label::make(name, context.empty() ? std::nullopt : std::optional(context));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

// ---- prompts gen ----------------------------------------------------------

struct PromptsGenArgs {
  std::string label, context, strategy = "naive", captions, coarse = "dog,cat,food,object";
  std::string llm_fixture, llm_endpoint, llm_model = "gpt-3.5-turbo", query_template;
  int count = 10;
};

int run_prompts_gen(const PromptsGenArgs& a) {
  const Label label = make_label(a.label, a.context);
  std::optional<PromptSet> set;
  if (a.strategy == "naive") {
    set.emplace(label, std::vector{naive_prompt(label)});
  } else if (a.strategy == "llm") {
    std::unique_ptr<LlmBackend> llm;
    if (!a.llm_fixture.empty()) {
      llm = std::make_unique<FixtureLlmBackend>(FixtureLlmBackend::load(a.llm_fixture));
    } else if (!a.llm_endpoint.empty()) {
      LlmSettings s;
      s.kind = "http";
      s.endpoint = a.llm_endpoint;
      s.model = a.llm_model;
      llm = make_llm_backend(s);
    } else {
      throw UsageError("--strategy llm needs --llm-fixture or --llm-endpoint");
    }
    LlmQuery q;
    if (!a.query_template.empty()) q.query_template = a.query_template;
    q.count = a.count;
    set = parse_llm_response(llm->complete(build_llm_query(label, q)), label, a.count);
  } else if (a.strategy == "caption") {
    if (a.captions.empty()) throw UsageError("--strategy caption needs --captions");
    set = caption_prompts(captions_for_label(read_captions(a.captions), label), split_csv(a.coarse), label, a.count);
  } else {
    throw UsageError("unknown strategy '" + a.strategy + "'");
  }
  std::cout << prompt_set_to_json(*set).dump() << '\n';
  return kOk;
}

// ---- prompts diversify ----------------------------------------------------

struct DiversifyArgs {
  std::string label, context, vectors, lexicon, base;
};

int run_prompts_diversify(const DiversifyArgs& a) {
  const Label label = make_label(a.label, a.context);
  const auto store = WordVectorStore::load(a.vectors);
  const auto lex = a.lexicon.empty() ? AnimacyLexicon{} : AnimacyLexicon::load(a.lexicon);
  std::optional<Prompt> base;
  if (!a.base.empty()) base = Prompt{a.base, label, PromptSource::Naive};
  const auto scores = animacy_scores(store, lex, label);
  auto j = prompt_set_to_json(diversify(store, lex, label, base));
  j["animacy"] = to_string(scores.decision);
  std::cout << j.dump() << '\n';
  return kOk;
}

// ---- formulate ------------------------------------------------------------

struct FormulateArgs {
  std::string config, out, backend, retry_failed;
  std::optional<int> max_in_flight;
  std::optional<std::uint64_t> seed;
};

int run_formulate(const FormulateArgs& a) {
  FormulationConfig cfg = read_config(a.config);
  if (a.backend == "mock") cfg.backend = BackendKind::Mock;
  else if (a.backend == "http") cfg.backend = BackendKind::Http;
  if (a.max_in_flight) cfg.max_in_flight = *a.max_in_flight;
  if (a.seed) cfg.seed = *a.seed;

  FormulateOptions opts;
  if (!a.retry_failed.empty()) opts.retry_failed = a.retry_failed;
  opts.cancel = &g_cancel;
  std::signal(SIGINT, on_sigint);

  Pipeline pipeline(std::move(cfg));
  const auto result = pipeline.formulate(a.out, opts);
  for (const auto& e : result.errors) std::cerr << "warning: " << error_record_to_json(e) << '\n';
  std::cout << result.manifest_path.string() << '\n';
  if (result.failures > 0) {
    std::cerr << result.failures << " image(s) failed; see " << result.error_log_path.string() << '\n';
    return kPartial;
  }
  return kOk;
}

// ---- postprocess ----------------------------------------------------------

struct PostprocessArgs {
  std::string noise, in, out, variance_map;
  std::optional<double> amount, variance, sigma, mean, salt_fraction;
  std::optional<int> kernel;
  std::uint64_t seed = 0;
};

NoiseSpec build_noise_spec(const PostprocessArgs& a) {
  const auto kind = parse_noise_kind(a.noise);
  if (!kind) throw UsageError("unknown noise kind '" + a.noise + "'");
  NoiseSpec spec = NoiseSpec::defaults(*kind, a.seed);
  std::vector<std::string> used;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GaussianBlurParams>) {
          if (a.kernel) p.kernel_size = *a.kernel, used.push_back("--kernel");
          if (a.sigma) p.sigma = *a.sigma, used.push_back("--sigma");
        } else if constexpr (std::is_same_v<P, GaussianNoiseParams>) {
          if (a.mean) p.mean = *a.mean, used.push_back("--mean");
          if (a.variance) p.variance = *a.variance, used.push_back("--variance");
        } else if constexpr (std::is_same_v<P, LocalvarNoiseParams>) {
          if (a.variance) p.variance = *a.variance, used.push_back("--variance");
          if (!a.variance_map.empty()) p.map_path = a.variance_map, used.push_back("--variance-map");
        } else if constexpr (std::is_same_v<P, SpeckleParams>) {
          if (a.variance) p.variance = *a.variance, used.push_back("--variance");
        } else if constexpr (std::is_same_v<P, SaltParams> || std::is_same_v<P, PepperParams>) {
          if (a.amount) p.amount = *a.amount, used.push_back("--amount");
        } else if constexpr (std::is_same_v<P, SaltAndPepperParams>) {
          if (a.amount) p.amount = *a.amount, used.push_back("--amount");
          if (a.salt_fraction) p.salt_fraction = *a.salt_fraction, used.push_back("--salt-fraction");
        }
      },
      spec.params);
  const std::pair<const char*, bool> given[] = {
      {"--kernel", a.kernel.has_value()},   {"--sigma", a.sigma.has_value()},
      {"--mean", a.mean.has_value()},       {"--variance", a.variance.has_value()},
      {"--amount", a.amount.has_value()},   {"--salt-fraction", a.salt_fraction.has_value()},
      {"--variance-map", !a.variance_map.empty()}};
  for (const auto& [flag, set] : given)
    if (set && std::find(used.begin(), used.end(), flag) == used.end())
      throw UsageError(std::string(flag) + " does not apply to " + std::string(to_string(*kind)));
  if (auto errs = spec.validate(); !errs.empty()) throw UsageError(errs.front());
  return spec;
}

int run_postprocess(const PostprocessArgs& a) {
  const NoiseSpec spec = build_noise_spec(a);
  const auto result = postprocess_dataset(a.in, spec, a.out);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << result.written << " image(s) written to " << a.out << '\n';
  return result.warnings.empty() ? kOk : kPartial;
}

// ---- audit ----------------------------------------------------------------

struct AuditArgs {
  std::string dataset, out, manifest, pairs_csv;
  int resize = 224;
  std::optional<std::size_t> sample_pairs;
  std::uint64_t seed = 0;
};

int run_audit(const AuditArgs& a) {
  AuditOptions opts;
  opts.resize_to = a.resize;
  if (a.sample_pairs) opts.sampling = PairSampling{*a.sample_pairs, a.seed};
  if (!a.manifest.empty()) opts.manifest = a.manifest;
  if (!a.pairs_csv.empty()) opts.pairs_csv = a.pairs_csv;
  const auto report = audit(a.dataset, opts);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (a.out.empty()) {
    std::cout << report_to_json(report) << '\n';
  } else {
    write_report(report, a.out);
    std::cout << a.out << '\n';
  }
  return report.unreadable.empty() ? kOk : kPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds labeled image datasets from class names and audits their diversity."};
  app.require_subcommand(1);

  auto* prompts = app.add_subcommand("prompts", "Prompt generation");
  prompts->require_subcommand(1);

  PromptsGenArgs gen;
  auto* gen_cmd = prompts->add_subcommand("gen", "Print a prompt set for one label as JSON");
  gen_cmd->add_option("--label", gen.label, "Class name")->required();
  gen_cmd->add_option("--context", gen.context, "Disambiguating context word appended to the label");
  gen_cmd->add_option("--strategy", gen.strategy, "Prompt strategy")
      ->check(CLI::IsMember({"naive", "llm", "caption"}))
      ->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Number of prompts requested")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--captions", gen.captions, "Caption file (caption strategy)")->check(CLI::ExistingFile);
  gen_cmd->add_option("--coarse-subjects", gen.coarse, "Comma-separated coarse subjects to replace")
      ->capture_default_str();
  gen_cmd->add_option("--llm-fixture", gen.llm_fixture, "Recorded LLM responses (llm strategy)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--llm-endpoint", gen.llm_endpoint,
                      "Chat-completion URL (llm strategy); key from DSFORGE_LLM_API_KEY");
  gen_cmd->add_option("--llm-model", gen.llm_model, "Chat model name")->capture_default_str();
  gen_cmd->add_option("--query-template", gen.query_template, "LLM query with {class} and optional {count}");

  DiversifyArgs div;
  auto* div_cmd = prompts->add_subcommand("diversify", "Print animacy-based prompt variants as JSON");
  div_cmd->add_option("--label", div.label, "Class name")->required();
  div_cmd->add_option("--context", div.context, "Disambiguating context word");
  div_cmd->add_option("--vectors", div.vectors, "Word vectors in word2vec text format")
      ->required()
      ->check(CLI::ExistingFile);
  div_cmd->add_option("--lexicon", div.lexicon, "Animacy lexicon JSON (defaults built in)")
      ->check(CLI::ExistingFile);
  div_cmd->add_option("--base", div.base, "Base prompt whose label mention gets the modifier");

  FormulateArgs form;
  auto* form_cmd = app.add_subcommand("formulate", "Generate a dataset; prints the manifest path");
  form_cmd->add_option("--config", form.config, "Formulation config JSON")->required()->check(CLI::ExistingFile);
  form_cmd->add_option("--out", form.out, "Output dataset directory")->required();
  form_cmd->add_option("--backend", form.backend, "Override the config's image backend")
      ->check(CLI::IsMember({"mock", "http"}));
  form_cmd->add_option("--max-in-flight", form.max_in_flight, "Concurrent generation requests")
      ->check(CLI::PositiveNumber);
  form_cmd->add_option("--seed", form.seed, "Override the config seed (config default 0)");
  form_cmd->add_option("--retry-failed", form.retry_failed,
                       "Regenerate only the slots listed in this error log")
      ->check(CLI::ExistingFile);

  PostprocessArgs post;
  auto* post_cmd = app.add_subcommand("postprocess", "Apply one noise technique to every image of a dataset");
  post_cmd->add_option("--noise", post.noise,
                       "gaussian_blur|gaussian_noise|localvar_noise|poisson_noise|salt|pepper|"
                       "salt_and_pepper|speckle")
      ->required();
  post_cmd->add_option("--amount", post.amount, "Corrupted pixel fraction (salt, pepper, salt_and_pepper)");
  post_cmd->add_option("--variance", post.variance, "Noise variance on [0,1] pixels");
  post_cmd->add_option("--mean", post.mean, "Gaussian noise mean");
  post_cmd->add_option("--salt-fraction", post.salt_fraction, "Salt share of corrupted pixels");
  post_cmd->add_option("--variance-map", post.variance_map, "Per-pixel variance map (localvar_noise)")
      ->check(CLI::ExistingFile);
  post_cmd->add_option("--kernel", post.kernel, "Blur kernel size (odd, >= 3)");
  post_cmd->add_option("--sigma", post.sigma, "Blur sigma");
  post_cmd->add_option("--seed", post.seed, "Noise seed")->capture_default_str();
  post_cmd->add_option("--in", post.in, "Input dataset directory")->required();
  post_cmd->add_option("--out", post.out, "Output dataset directory")->required();

  AuditArgs aud;
  auto* aud_cmd = app.add_subcommand("audit", "Per-class SSIM and colorfulness report");
  aud_cmd->add_option("--dataset", aud.dataset, "Dataset directory (one subdirectory per class)")->required();
  aud_cmd->add_option("--resize", aud.resize, "Square side images are resized to before scoring")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  aud_cmd->add_option("--sample-pairs", aud.sample_pairs, "Score K random pairs per class instead of all");
  aud_cmd->add_option("--seed", aud.seed, "Pair sampling seed")->capture_default_str();
  aud_cmd->add_option("--manifest", aud.manifest, "Restrict to the images listed in this manifest")
      ->check(CLI::ExistingFile);
  aud_cmd->add_option("--pairs-csv", aud.pairs_csv, "Also write every pair score to this CSV");
  aud_cmd->add_option("--out", aud.out, "Report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return run_prompts_gen(gen);
    if (*div_cmd) return run_prompts_diversify(div);
    if (*form_cmd) return run_formulate(form);
    if (*post_cmd) return run_postprocess(post);
    if (*aud_cmd) return run_audit(aud);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
