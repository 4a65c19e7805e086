#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <json.hpp>

#include "dsforge/genclient.hpp"
#include "dsforge/metrics.hpp"
#include "dsforge/pipeline.hpp"
#include "support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

// stdout only; stderr goes to a side file for inspection.
Run run(const std::string& args, const fs::path& err_file = "/dev/null") {
  const std::string cmd = std::string(DSFORGE_CLI) + " " + args + " 2>" + err_file.string();
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("cli: prompts gen") {
  const auto r = run("prompts gen --label Bengal --context pet --strategy naive --count 1");
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["prompts"] == json::array({"a photo of one Bengal pet"}));

  testing::TempDir dir("cli_gen");
  testing::write_text(dir / "c.txt", "a dog on grass\na cat on a mat\n");
  const auto c = run("prompts gen --label pug --strategy caption --captions " + (dir / "c.txt").string() +
                     " --coarse-subjects dog,cat --count 5");
  CHECK(c.code == 0);
  CHECK(json::parse(c.out)["prompts"] == json::array({"a pug on grass", "a pug on a mat"}));

  const auto l = run("prompts gen --label yorkshire-terrier --strategy llm --llm-fixture " +
                     std::string(DSFORGE_DATA_DIR) + "/llm_fixture.json");
  CHECK(l.code == 0);
  CHECK(json::parse(l.out)["prompts"].size() == 10);

  CHECK(run("prompts gen --label x --strategy llm").code == 1);
  CHECK(run("prompts gen --label x --strategy psychic").code == 1);
  CHECK(run("prompts gen --strategy naive").code == 1);
  CHECK(run("prompts gen --label a/b").code == 1);
}

TEST_CASE("cli: prompts diversify") {
  testing::TempDir dir("cli_div");
  testing::write_text(dir / "v.txt", testing::animacy_vector_file());
  const auto r = run("prompts diversify --label lion --vectors " + (dir / "v.txt").string());
  CHECK(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["prompts"] == json::array({"female lion", "young lion", "sick lion"}));
  CHECK(j["animacy"] == "living");
  CHECK(run("prompts diversify --label unicorn --vectors " + (dir / "v.txt").string()).code == 2);
}

TEST_CASE("cli: help documents every flag") {
  const std::pair<const char*, std::vector<const char*>> cmds[] = {
      {"prompts gen", {"--label", "--context", "--strategy", "--count", "--captions", "--coarse-subjects"}},
      {"prompts diversify", {"--label", "--vectors", "--lexicon"}},
      {"formulate", {"--config", "--out", "--backend", "--max-in-flight", "--retry-failed"}},
      {"postprocess", {"--noise", "--amount", "--variance", "--kernel", "--sigma", "--seed", "--in", "--out"}},
      {"audit", {"--dataset", "--resize", "--sample-pairs", "--out"}}};
  for (const auto& [cmd, flags] : cmds) {
    const auto r = run(std::string(cmd) + " --help");
    CHECK(r.code == 0);
    for (const char* f : flags) {
      CAPTURE(cmd);
      CAPTURE(f);
      CHECK(r.out.find(f) != std::string::npos);
    }
  }
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("cli: formulate, postprocess, audit") {
  testing::TempDir dir("cli_flow");
  testing::write_text(dir / "cfg.json", R"({"labels": ["cat", "dog"], "prompts_per_class": 2,
      "images_per_prompt": 2, "resolution": 64, "output_size": 32})");
  const auto ds = dir / "ds";
  const auto f = run("formulate --config " + (dir / "cfg.json").string() + " --out " + ds.string() +
                     " --backend mock --max-in-flight 2");
  CHECK(f.code == 0);
  CHECK(f.out == (ds / "dataset.manifest.json").string() + "\n");
  const auto m = dsforge::read_manifest(ds / "dataset.manifest.json");
  CHECK(m.image_count() == 8);

  const auto noisy = dir / "noisy";
  const auto p = run("postprocess --noise salt --amount 0.2 --seed 3 --in " + ds.string() + " --out " +
                     noisy.string());
  CHECK(p.code == 0);
  CHECK(dsforge::read_manifest(noisy / "dataset.manifest.json").image_count() == 8);
  CHECK(run("postprocess --noise salt --kernel 5 --in " + ds.string() + " --out " + noisy.string()).code == 1);
  CHECK(run("postprocess --noise salt --amount 7 --in " + ds.string() + " --out " + noisy.string()).code == 1);
  CHECK(run("postprocess --noise glitter --in " + ds.string() + " --out " + noisy.string()).code == 1);
  CHECK(run("postprocess --noise gaussian_blur --kernel 3 --sigma 0.7 --in " + ds.string() + " --out " +
            (dir / "blur").string())
            .code == 0);

  const auto report = dir / "report.json";
  const auto a = run("audit --dataset " + ds.string() + " --resize 32 --out " + report.string());
  CHECK(a.code == 0);
  const auto rep = dsforge::report_from_json(testing::read_text(report));
  CHECK(rep.per_class.at("cat").ssim->pair_count == 6);
  const auto s = run("audit --dataset " + ds.string() + " --resize 32 --sample-pairs 3 --seed 1");
  CHECK(s.code == 0);
  CHECK(json::parse(s.out)["per_class"]["dog"]["ssim_sampled"] == true);

  testing::TempDir empty("cli_empty");
  const auto err = dir / "err.txt";
  CHECK(run("audit --dataset " + empty.path().string(), err).code == 2);
  CHECK(testing::read_text(err).find("no classes found") != std::string::npos);

  testing::write_text(dir / "bad.json", R"({"labels": [], "prompts_per_class": 0})");
  CHECK(run("formulate --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()).code == 2);
}

TEST_CASE("cli: partial failure exits with 3") {
  // an HTTP backend whose endpoint refuses connections fails every image; a class with
  // zero images is a runtime error, so use retry-failed to exercise the partial path
  testing::TempDir dir("cli_partial");
  testing::write_text(dir / "cfg.json", R"({"labels": ["cat"], "prompts_per_class": 1,
      "images_per_prompt": 2, "resolution": 64, "output_size": 32})");
  const auto ds = dir / "ds";
  CHECK(run("formulate --config " + (dir / "cfg.json").string() + " --out " + ds.string()).code == 0);
  // corrupt one image so postprocess reports a partial result
  testing::write_text(ds / "cat/0_1.png", "broken");
  CHECK(run("postprocess --noise pepper --in " + ds.string() + " --out " + (dir / "pp").string()).code == 3);
  CHECK(run("audit --dataset " + ds.string() + " --resize 32").code == 3);
}

TEST_CASE("cli: bundled example config") {
  testing::TempDir dir("cli_example");
  const auto r = run("formulate --config " + std::string(DSFORGE_DATA_DIR) + "/example_config.json --out " +
                     (dir / "ds").string());
  CHECK(r.code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "ds")) files += e.path().extension() == ".png";
  CHECK(files == 360);

  const auto div = run("formulate --config " + std::string(DSFORGE_DATA_DIR) + "/diversify_config.json --out " +
                       (dir / "div").string());
  CHECK(div.code == 0);
  const auto m = dsforge::read_manifest(dir / "div" / "dataset.manifest.json");
  CHECK(m.image_count() == 36);
  for (const auto& cls : m.classes)
    for (const auto& img : cls.images) {
      CHECK(img.prompt.source == dsforge::PromptSource::Diversified);
      CHECK(img.postprocess.has_value());
    }
}
