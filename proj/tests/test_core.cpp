#include <doctest.h>

#include <regex>

#include "dsforge/json_io.hpp"
#include "dsforge/pipeline.hpp"
#include "support.hpp"

using namespace dsforge;

namespace {

FormulationConfig one_label() {
  FormulationConfig cfg;
  cfg.labels = {Label{"Bengal", std::nullopt}};
  return cfg;
}

DatasetManifest sample_manifest(int classes, int per_class) {
  DatasetManifest m;
  m.created_at = "2026-01-02T03:04:05Z";
  m.generator = "mock";
  m.image_size = {224, 224};
  for (int c = 0; c < classes; ++c) {
    const Label label{"class" + std::to_string(c), c % 2 ? std::optional<std::string>("pet") : std::nullopt};
    ClassEntry ce{label, {}};
    for (int i = 0; i < per_class; ++i) {
      ImageEntry e{label.name + "/" + std::to_string(i / 18) + "_" + std::to_string(i % 18) + ".png",
                   naive_prompt(label), 0x9e3779b97f4a7c15ULL * (i + 1), std::nullopt};
      if (i % 3 == 0) e.postprocess = NoiseSpec{SaltAndPepperParams{0.1, 0.3}, static_cast<std::uint64_t>(i)};
      if (i % 3 == 1) e.postprocess = NoiseSpec{GaussianBlurParams{5, 1.1}, 0};
      ce.images.push_back(std::move(e));
    }
    m.classes.push_back(std::move(ce));
  }
  return m;
}

}  // namespace

TEST_CASE("labels") {
  CHECK(Label::make("Bengal").name == "Bengal");
  CHECK(Label::make("boxer", "pet").context == "pet");
  CHECK_THROWS_AS(Label::make(""), InvalidArgument);
  CHECK_THROWS_AS(Label::make("a/b"), InvalidArgument);
  CHECK_THROWS_AS(Label::make("a\\b"), InvalidArgument);
  CHECK_THROWS_AS(Label::make(".."), InvalidArgument);
}

TEST_CASE("prompts and prompt sets") {
  const Label l{"lion", std::nullopt};
  CHECK_THROWS_AS(Prompt::make("", l, PromptSource::Llm), InvalidArgument);
  CHECK_THROWS_AS(Prompt::make("a tiger", l, PromptSource::Naive), InvalidArgument);
  CHECK_NOTHROW(Prompt::make("a big cat", l, PromptSource::Llm));
  CHECK_THROWS_AS(PromptSet(l, {}), InvalidArgument);
  const Prompt p{"a lion", l, PromptSource::Naive};
  CHECK_THROWS_AS(PromptSet(l, {p, p}), InvalidArgument);
  CHECK_THROWS_AS(PromptSet(Label{"cat", std::nullopt}, {p}), InvalidArgument);
  for (auto s : {PromptSource::Naive, PromptSource::Llm, PromptSource::Caption, PromptSource::Diversified})
    CHECK(parse_prompt_source(to_string(s)) == s);
}

TEST_CASE("validate_config examples") {
  CHECK(validate_config(one_label()).empty());

  auto cfg = one_label();
  cfg.prompts_per_class = 0;
  CHECK(validate_config(cfg) == std::vector<std::string>{"prompts_per_class must be ≥ 1"});

  cfg = one_label();
  cfg.resolution = 128;
  cfg.output_size = 224;
  CHECK(validate_config(cfg) == std::vector<std::string>{"resolution must be ≥ output_size"});
}

TEST_CASE("validate_config is empty iff a pipeline can be built") {
  std::vector<FormulationConfig> cases;
  cases.push_back(one_label());
  auto add = [&](auto mutate) {
    auto c = one_label();
    mutate(c);
    cases.push_back(c);
  };
  add([](auto& c) { c.labels.clear(); });
  add([](auto& c) { c.labels.push_back(c.labels[0]); });
  add([](auto& c) { c.images_per_prompt = 0; });
  add([](auto& c) { c.resolution = 770; });
  add([](auto& c) { c.resolution = 56, c.output_size = 32; });
  add([](auto& c) { c.max_in_flight = 0; });
  add([](auto& c) { c.noise = NoiseSpec{SaltParams{2.0}, 0}; });
  add([](auto& c) { c.noise = NoiseSpec{SaltParams{0.2}, 0}; });
  add([](auto& c) { c.backend = BackendKind::Http; });
  add([](auto& c) { c.backend = BackendKind::Http, c.http.endpoint = "http://localhost:1/x"; });
  add([](auto& c) { c.strategy = PromptStrategy::Llm; });
  add([](auto& c) { c.strategy = PromptStrategy::Llm, c.llm.fixture_path = "f.json"; });
  add([](auto& c) { c.strategy = PromptStrategy::Llm, c.llm.kind = "carrier-pigeon"; });
  add([](auto& c) {
    c.strategy = PromptStrategy::Llm, c.llm.fixture_path = "f.json", c.llm.query_template = "no class";
  });
  add([](auto& c) { c.strategy = PromptStrategy::Caption; });
  add([](auto& c) { c.strategy = PromptStrategy::Caption, c.captions_path = "c.txt"; });
  add([](auto& c) { c.diversify = true; });
  add([](auto& c) { c.diversify = true, c.vectors_path = "v.txt"; });
  add([](auto& c) { c.labels[0].name = "a/b"; });
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    const bool valid = validate_config(cases[i]).empty();
    bool built = true;
    try {
      Pipeline p(cases[i], std::make_shared<MockBackend>());
    } catch (const ConfigError&) {
      built = false;
    }
    CHECK(valid == built);
  }
}

TEST_CASE("config JSON round trip and path resolution") {
  testing::TempDir dir("cfg");
  testing::write_text(dir / "cfg.json", R"({
    "labels": ["Bengal", {"name": "boxer", "context": "pet"}],
    "prompts_per_class": 3, "images_per_prompt": 2, "resolution": 256, "output_size": 128,
    "seed": 99, "strategy": "caption", "captions_path": "caps.txt", "diversify": true,
    "vectors_path": "sub/v.txt", "backend": "mock",
    "noise": {"kind": "gaussian_blur", "kernel_size": 3, "sigma": 0.8, "seed": 5},
    "http": {"endpoint": "http://x/y", "extra": {"steps": 30}}
  })");
  const auto cfg = read_config(dir / "cfg.json");
  CHECK(cfg.labels.size() == 2);
  CHECK(cfg.labels[1].context == "pet");
  CHECK(cfg.prompts_per_class == 3);
  CHECK(cfg.seed == 99);
  CHECK(cfg.strategy == PromptStrategy::Caption);
  CHECK(cfg.captions_path == (dir / "caps.txt").string());
  CHECK(cfg.vectors_path == (dir / "sub/v.txt").string());
  REQUIRE(cfg.noise.has_value());
  CHECK(*cfg.noise == NoiseSpec{GaussianBlurParams{3, 0.8}, 5});
  CHECK(Json::parse(cfg.http.extra_json)["steps"] == 30);
  CHECK(parse_config(config_to_json(cfg)) == cfg);

  CHECK_THROWS_AS(parse_config("{"), SchemaError);
  CHECK_THROWS_AS(parse_config("{}"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"labels": [], "strategy": "telepathy"})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"labels": [], "prompts_per_class": "ten"})"), SchemaError);
  CHECK_THROWS_AS(read_config(dir / "missing.json"), IoError);
}

TEST_CASE("defaults follow the reference protocol") {
  const FormulationConfig cfg;
  CHECK(cfg.prompts_per_class == 10);
  CHECK(cfg.images_per_prompt == 18);
  CHECK(cfg.resolution == 768);
  CHECK(cfg.output_size == 224);
  CHECK(cfg.seed == 0);
}

TEST_CASE("manifest round trip") {
  testing::TempDir dir("manifest");
  for (auto [classes, per] : {std::pair{0, 0}, {2, 180}, {3, 1}}) {
    CAPTURE(classes);
    const auto m = sample_manifest(classes, per);
    const auto path = dir / ("m" + std::to_string(classes) + std::string(kManifestExtension));
    write_manifest(m, path);
    CHECK(read_manifest(path) == m);
    CHECK(read_manifest(path).image_count() == static_cast<std::size_t>(classes * per));
  }
  // no temp file left behind
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    CHECK(e.path().string().find(".tmp") == std::string::npos);
}

TEST_CASE("manifest schema errors") {
  testing::TempDir dir("manifest_bad");
  auto m = sample_manifest(1, 2);
  m.classes[0].images[1].path = m.classes[0].images[0].path;
  write_manifest(m, dir / "dup.manifest.json");
  try {
    read_manifest(dir / "dup.manifest.json");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("class0/0_0.png") != std::string::npos);
  }

  m = sample_manifest(1, 1);
  m.classes[0].images[0].prompt.label.name = "other";
  write_manifest(m, dir / "label.manifest.json");
  CHECK_THROWS_AS(read_manifest(dir / "label.manifest.json"), SchemaError);

  Json j = sample_manifest(1, 1);
  j["classes"][0]["images"][0].erase("seed");
  testing::write_text(dir / "missing.manifest.json", j.dump());
  try {
    read_manifest(dir / "missing.manifest.json");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
  testing::write_text(dir / "junk.manifest.json", "not json");
  CHECK_THROWS_AS(read_manifest(dir / "junk.manifest.json"), SchemaError);
  CHECK_THROWS_AS(read_manifest(dir / "nope.manifest.json"), IoError);
}

TEST_CASE("manifest JSON uses lower_snake_case field names") {
  const Json j = sample_manifest(1, 1);
  for (const char* k : {"classes", "created_at", "generator", "image_size"}) CHECK(j.contains(k));
  const auto& img = j["classes"][0]["images"][0];
  for (const char* k : {"path", "prompt", "seed", "postprocess"}) CHECK(img.contains(k));
  CHECK(img["postprocess"]["kind"] == "salt_and_pepper");
  CHECK(j["image_size"]["width"] == 224);
}

TEST_CASE("seeds survive JSON exactly") {
  const std::uint64_t big = 0xffffffffffffffffULL;
  ImageEntry e{"a/0_0.png", Prompt{"a photo of one a", Label{"a", std::nullopt}, PromptSource::Naive}, big,
               std::nullopt};
  CHECK(Json(e).get<ImageEntry>().seed == big);
}

TEST_CASE("noise spec JSON") {
  for (int k = 0; k <= static_cast<int>(NoiseKind::Speckle); ++k) {
    const auto s = NoiseSpec::defaults(static_cast<NoiseKind>(k), 77);
    CHECK(Json(s).get<NoiseSpec>() == s);
  }
  CHECK_THROWS_AS(Json::parse(R"({"kind": "jpeg", "seed": 0})").get<NoiseSpec>(), SchemaError);
  const auto partial = Json::parse(R"({"kind": "salt"})").get<NoiseSpec>();
  CHECK(partial == NoiseSpec{SaltParams{0.05}, 0});
  LocalvarNoiseParams lv;
  lv.map = std::make_shared<VarianceMap>(VarianceMap{1, 2, {0.1, 0.2}});
  const NoiseSpec inline_map{lv, 3};
  CHECK(Json(inline_map).get<NoiseSpec>() == inline_map);
}

TEST_CASE("rfc3339 timestamps") {
  CHECK(std::regex_match(rfc3339_now(), std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));
}
