#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "ppm/manifest.hpp"
#include "ppm/metrics.hpp"
#include "ppm/pfm.hpp"

using namespace ppm;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PPM_CLI_PATH + "\" " + args + " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<nlohmann::json> read_trace(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

const char* kSmallFlags = " --C 16 --N 2 --radius 2 --seed 3";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate writes one PFM triple per frame and is reproducible") {
    testing::TempDir dir("cli_gen");
    write_file(dir / "spec.json",
               R"({"width":32,"height":32,"frames":3,"background_disparity":1,)"
               R"("rectangles":[{"x":4,"y":4,"w":8,"h":8,"disparity":5,"velocity":[1,0]}]})");
    const auto a = cli("generate --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "a"));
    REQUIRE(a.code == 0);
    CHECK(cli("generate --spec " + q(dir / "spec.json") + " --seed 4 --out " + q(dir / "b")).code == 0);
    int pfms = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) pfms += e.path().extension() == ".pfm";
    CHECK(pfms == 9);
    CHECK(fs::exists(dir / "a" / "manifest.json"));
    for (const char* name : {"left_0002.pfm", "right_0000.pfm", "gt_0001.pfm", "manifest.json"})
      CHECK(read_file(dir / "a" / name) == read_file(dir / "b" / name));
  }

  TEST_CASE("invalid specs and usage errors exit nonzero with a message") {
    testing::TempDir dir("cli_bad");
    write_file(dir / "spec.json",
               R"({"width":32,"height":32,"frames":2,"rectangles":[{"x":30,"y":0,"w":8,"h":8,"disparity":2,"velocity":[0,0]}]})");
    const auto r = cli("generate --spec " + q(dir / "spec.json") + " --out " + q(dir / "o"));
    CHECK(r.code == 2);
    CHECK(r.output.find("canvas") != std::string::npos);
    write_file(dir / "broken.json", "{not json");
    CHECK(cli("generate --spec " + q(dir / "broken.json") + " --out " + q(dir / "o")).code == 2);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("run --manifest " + q(dir / "missing.json") + " --out " + q(dir / "o")).code == 1);
  }

  TEST_CASE("run, eval and trace-dump") {
    testing::TempDir dir("cli_run");
    save_sequence(dir / "seq", generate_scene(random_scene_spec(5, 32, 32, 20, 2, 0.5f), 5));
    const std::string manifest = q(dir / "seq" / "manifest.json");

    SUBCASE("alpha 0 and no-memory write identical disparities") {
      REQUIRE(cli("run --manifest " + manifest + " --out " + q(dir / "a0") + " --alpha 0" + kSmallFlags).code == 0);
      REQUIRE(cli("run --manifest " + manifest + " --out " + q(dir / "nm") + " --no-memory" + kSmallFlags).code == 0);
      for (int t = 0; t < 20; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "disp_%04d.pfm", t);
        CHECK(read_file(dir / "a0" / name) == read_file(dir / "nm" / name));
      }
    }

    SUBCASE("ppm with K 5 on 20 frames keeps five frames per record") {
      REQUIRE(cli("run --manifest " + manifest + " --out " + q(dir / "k5") + " --policy ppm --K 5" + kSmallFlags).code == 0);
      const auto trace = read_trace(dir / "k5" / "trace.jsonl");
      CHECK(trace.size() == 40);
      for (const auto& rec : trace) CHECK(rec["I"].size() == 5);
      const auto dump = cli("trace-dump --trace " + q(dir / "k5" / "trace.jsonl") + " --frame 3");
      CHECK(dump.code == 0);
      std::istringstream lines(dump.output);
      std::string header, line;
      std::getline(lines, header);
      int records = 0;
      while (std::getline(lines, line)) {
        CHECK(std::stoi(line) == 3);
        ++records;
      }
      CHECK(records == 2);
    }

    SUBCASE("causal mode at frame 0 only sees frame 0") {
      REQUIRE(cli("run --manifest " + manifest + " --out " + q(dir / "c") + " --mode causal" + kSmallFlags).code == 0);
      for (const auto& rec : read_trace(dir / "c" / "trace.jsonl")) {
        if (rec["t"] == 0) CHECK(rec["I"] == nlohmann::json::array({0}));
        for (int i : rec["I"]) CHECK(i <= rec["t"].get<int>());
      }
    }

    SUBCASE("eval of ground truth against itself is zero") {
      const Manifest m = read_manifest(dir / "seq" / "manifest.json");
      fs::create_directories(dir / "gt");
      for (std::size_t t = 0; t < m.frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "disp_%04zu.pfm", t);
        fs::copy_file(*m.frames[t].gt, dir / "gt" / name);
      }
      const auto r = cli("eval --pred " + q(dir / "gt") + " --manifest " + manifest + " --json " + q(dir / "r.json"));
      REQUIRE(r.code == 0);
      const auto doc = read_json_file(dir / "r.json");
      CHECK(doc["epe"] == 0.0);
      CHECK(doc["tepe"] == 0.0);
      CHECK(doc["delta_npx"]["3"] == 0.0);
      CHECK(doc["delta_t_npx"]["1"] == 0.0);

      fs::remove(dir / "gt" / "disp_0007.pfm");
      const auto missing = cli("eval --pred " + q(dir / "gt") + " --manifest " + manifest);
      CHECK(missing.code == 2);
      CHECK(missing.output.find("disp_0007.pfm") != std::string::npos);
    }
  }

  TEST_CASE("eval matches the library metrics") {
    testing::TempDir dir("cli_eval");
    const auto seq = generate_scene(random_scene_spec(6, 32, 32, 3, 0, 0.0f), 6);
    save_sequence(dir / "seq", seq);
    fs::create_directories(dir / "pred");
    std::vector<FloatRaster> preds;
    Rng rng(1);
    for (int t = 0; t < 3; ++t) {
      FloatRaster p = (*seq.gt_disparity)[t];
      for (float& v : p.data()) v += static_cast<float>(rng.uniform(-4, 4));
      char name[32];
      std::snprintf(name, sizeof(name), "disp_%04d.pfm", t);
      save_pfm(dir / "pred" / name, p);
      preds.push_back(std::move(p));
    }
    REQUIRE(cli("eval --pred " + q(dir / "pred") + " --manifest " + q(dir / "seq" / "manifest.json") + " --json " +
                q(dir / "r.json"))
                .code == 0);
    const auto doc = read_json_file(dir / "r.json");
    const auto want = evaluate_sequence(preds, *seq.gt_disparity);
    CHECK(doc["epe"].get<double>() == doctest::Approx(want.epe).epsilon(1e-12));
    CHECK(doc["tepe"].get<double>() == doctest::Approx(want.tepe).epsilon(1e-12));
    CHECK(doc["delta_npx"]["1"].get<double>() == doctest::Approx(want.delta_npx.at(1.0)));
  }

  TEST_CASE("compare-policies writes json and csv") {
    testing::TempDir dir("cli_cmp");
    const auto r = cli("compare-policies --scenes 1 --frames 4 --width 32 --height 32 --corrupted 1 --policies ppm,random"
                       " --K 2 --out " + q(dir.path()) + kSmallFlags);
    REQUIRE(r.code == 0);
    const auto doc = read_json_file(dir / "comparison.json");
    REQUIRE(doc.size() == 2);
    CHECK(doc[1]["policy"] == "random");
    CHECK(fs::exists(dir / "comparison.csv"));
  }
}
