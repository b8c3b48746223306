#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aog/cli.hpp"
#include "aog/dataio.hpp"
#include "aog/model.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace aog;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("aog_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void spit(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  REQUIRE(out.good());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct CliRun {
  int status = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.status = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

ModelConfig small_cfg() {
  ModelConfig cfg;
  cfg.rows = 1;
  cfg.cols = 2;
  cfg.or_count = 2;
  cfg.max_leaves = 2;
  cfg.window_w = 16.0;
  cfg.window_h = 8.0;
  cfg.sc.n_points = 6;
  cfg.sc.n_angles = 4;
  cfg.sc.n_radii = 2;
  return cfg;
}

// Manifest with one test image that has two ground-truth boxes.
fs::path hand_example_manifest(const fs::path& dir) {
  spit(dir / "img.txt",
       "AOGC 1 100 50 +1\n"
       "GT 0 0 10 10\n"
       "GT 20 0 30 10\n");
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["samples"] =
      nlohmann::json::array({{{"id", "img"}, {"path", "img.txt"}, {"split", "test"}}});
  fs::path path = dir / "manifest.json";
  spit(path, manifest.dump(2) + "\n");
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage problems exit with status one and print usage text") {
    CliRun none = run({});
    CHECK(none.status == 1);
    CHECK(none.err.find("synth") != std::string::npos);
    CHECK(none.err.find("eval") != std::string::npos);

    CHECK(run({"frobnicate"}).status == 1);
    CHECK(run({"detect"}).status == 1);                       // missing arguments
    CHECK(run({"eval", "--bogus-flag"}).status == 1);         // unknown flag
    CHECK(run({"detect", "m", "d", "--split", "x"}).status == 1);  // bad choice

    CliRun help = run({"--help"});
    CHECK(help.status == 0);
    CHECK(help.out.find("synth") != std::string::npos);
    CHECK(help.err.empty());
  }

  TEST_CASE("eval prints the hand example's average precision") {
    fs::path dir = fresh_dir("eval_hand");
    fs::path manifest = hand_example_manifest(dir);
    spit(dir / "dets.txt",
         "img 0.9 0 0 10 10\n"
         "img 0.8 50 20 60 30\n"
         "img 0.7 20 0 30 10\n");

    CliRun r = run({"eval", (dir / "dets.txt").string(), manifest.string(), "--top1-accuracy",
                    "--fppi-csv", (dir / "fppi.csv").string(), "--pr-csv",
                    (dir / "pr.csv").string(), "--pr-svg", (dir / "pr.svg").string(),
                    "--overlay-dir", (dir / "overlays").string()});
    CHECK(r.status == 0);
    CHECK(r.err.empty());
    CHECK(r.out == "AP 0.8333\ntop1-accuracy 1.0000\n");

    CHECK(slurp(dir / "fppi.csv") == "fppi,recall\n0,0.5\n1,0.5\n1,1\n");
    CHECK(slurp(dir / "pr.csv") == "recall,precision\n0.5,1\n0.5,0.5\n1,0.6666666666666666\n");
    CHECK(slurp(dir / "pr.svg").rfind("<svg", 0) == 0);
    CHECK(slurp(dir / "overlays" / "img.svg").rfind("<svg", 0) == 0);

    CliRun again = run({"eval", (dir / "dets.txt").string(), manifest.string()});
    CHECK(again.out == "AP 0.8333\n");
  }

  TEST_CASE("broken inputs are data errors with located messages") {
    fs::path dir = fresh_dir("data_errors");
    fs::path manifest = hand_example_manifest(dir);

    spit(dir / "unknown.txt", "ghost 0.9 0 0 10 10\n");
    CliRun unknown = run({"eval", (dir / "unknown.txt").string(), manifest.string()});
    CHECK(unknown.status == 2);
    CHECK(unknown.err.find("unknown.txt:1:") != std::string::npos);
    CHECK(unknown.err.find("ghost") != std::string::npos);

    spit(dir / "short.txt", "img 0.9 0 0\n");
    CHECK(run({"eval", (dir / "short.txt").string(), manifest.string()}).status == 2);
    spit(dir / "bad_num.txt", "img zero 0 0 10 10\n");
    CHECK(run({"eval", (dir / "bad_num.txt").string(), manifest.string()}).status == 2);

    CliRun missing = run({"train", (dir / "nope.json").string(), "--model-out",
                          (dir / "m.bin").string()});
    CHECK(missing.status == 2);

    spit(dir / "garbage.bin", "not a model at all");
    CliRun corrupt = run({"inspect", (dir / "garbage.bin").string()});
    CHECK(corrupt.status == 2);
    CHECK(corrupt.err.find("checksum") != std::string::npos);

    spit(dir / "badcfg.json", "{\"model\": {\"rows\": 1, \"colz\": 2}}");
    CliRun badcfg = run({"--config", (dir / "badcfg.json").string(), "train", manifest.string(),
                         "--model-out", (dir / "m.bin").string()});
    CHECK(badcfg.status == 2);
    CHECK(badcfg.err.find("colz") != std::string::npos);
  }

  TEST_CASE("inspect describes a fresh model as having no live leaves") {
    fs::path dir = fresh_dir("inspect");
    AndOrModel fresh(small_cfg());
    save_model(fresh, (dir / "fresh.bin").string());

    CliRun r = run({"inspect", (dir / "fresh.bin").string()});
    CHECK(r.status == 0);
    CHECK(r.out.find("live leaves: 0 of 4") != std::string::npos);
    CHECK(r.out.find("grid 1x2, 2 leaf slots per or-node") != std::string::npos);
    CHECK(r.out.find("or-node 0 (row 0, col 0): 0 live []") != std::string::npos);
    CHECK(r.out.find("weight norms: leaves 0,") != std::string::npos);
    CHECK(r.out.find("edges: enabled, 1 adjacent pairs, 4 pair weights") != std::string::npos);
  }

  TEST_CASE("the whole pipeline runs end to end and is reproducible") {
    fs::path dir = fresh_dir("pipeline");

    SynthSpec spec;
    spec.canvas_w = 32.0;
    spec.canvas_h = 24.0;
    spec.jitter = 0.3;
    spec.occlusion = 0.1;
    spec.clutter_lo = 1;
    spec.clutter_hi = 2;
    spec.seed = 11;
    SynthClass shape;
    shape.contours.push_back({0, {{4, 4}, {14, 4}}});
    shape.contours.push_back({1, {{4, 4}, {4, 12}}});
    spec.classes.push_back(shape);
    save_synth_spec(spec, (dir / "spec.json").string());

    nlohmann::json cfg;
    cfg["model"] = {{"rows", 2},      {"cols", 2},           {"max_leaves", 2},
                    {"window_w", 16}, {"window_h", 12},
                    {"descriptor", {{"points", 6}, {"angles", 4}, {"radii", 2}}}};
    cfg["train"] = {{"penalty", 10.0}, {"max_iterations", 3}};
    cfg["detect"] = {{"num_scales", 3}, {"per_octave", 2}};
    spit(dir / "config.json", cfg.dump(2) + "\n");

    CliRun synth = run({"synth", (dir / "spec.json").string(), "--out", (dir / "data").string(),
                        "--train-pos", "6", "--train-neg", "6", "--test-pos", "4", "--test-neg",
                        "4"});
    REQUIRE(synth.status == 0);
    CHECK(synth.out.find("train: 12 samples") != std::string::npos);
    CHECK(synth.out.find("test: 8 samples") != std::string::npos);
    fs::path manifest = dir / "data" / "manifest.json";
    REQUIRE(fs::exists(manifest));

    std::vector<std::string> train_args = {
        "--config", (dir / "config.json").string(), "train", manifest.string(), "--model-out",
        (dir / "model.bin").string(), "--report", (dir / "report.json").string()};
    CliRun train1 = run(train_args);
    REQUIRE(train1.status == 0);
    CHECK(train1.out.find("training on 6 positives, 6 negatives") != std::string::npos);
    CHECK(train1.out.find("iteration 1:") != std::string::npos);
    REQUIRE(fs::exists(dir / "model.bin"));

    nlohmann::json report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report.contains("converged"));
    CHECK(report["iterations"].is_array());
    CHECK(report["iteration_count"].get<int>() >= 1);

    // Retraining writes bit-identical artifacts: the pipeline has no hidden state.
    std::string model_bytes = slurp(dir / "model.bin");
    fs::path model2 = dir / "model2.bin";
    std::vector<std::string> train_args2 = {
        "--config", (dir / "config.json").string(), "train", manifest.string(), "--model-out",
        model2.string()};
    CliRun train2 = run(train_args2);
    REQUIRE(train2.status == 0);
    CHECK(slurp(model2) == model_bytes);

    std::vector<std::string> detect_args = {
        "--config", (dir / "config.json").string(), "detect", (dir / "model.bin").string(),
        manifest.string(), "--out", (dir / "dets.txt").string()};
    CliRun det1 = run(detect_args);
    REQUIRE(det1.status == 0);
    std::string dets = slurp(dir / "dets.txt");
    for (char c : dets) REQUIRE((c == '\n' || (c >= ' ' && c <= '~')));

    detect_args.back() = (dir / "dets2.txt").string();
    CliRun det2 = run(detect_args);
    REQUIRE(det2.status == 0);
    CHECK(slurp(dir / "dets2.txt") == dets);

    CliRun eval1 = run({"eval", (dir / "dets.txt").string(), manifest.string()});
    REQUIRE(eval1.status == 0);
    REQUIRE(eval1.out.rfind("AP ", 0) == 0);
    double ap = std::stod(eval1.out.substr(3));
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
    CliRun eval2 = run({"eval", (dir / "dets.txt").string(), manifest.string()});
    CHECK(eval2.out == eval1.out);

    CliRun ins = run({"inspect", (dir / "model.bin").string()});
    CHECK(ins.status == 0);
    CHECK(ins.out.find("live leaves:") != std::string::npos);

    // Detection on one sample file uses its stem as the image id.
    fs::path one = dir / "data" / "test_pos_000.aogc";
    REQUIRE(fs::exists(one));
    CliRun single = run({"--config", (dir / "config.json").string(), "detect",
                         (dir / "model.bin").string(), one.string()});
    CHECK(single.status == 0);
    if (!single.out.empty()) CHECK(single.out.rfind("test_pos_000 ", 0) == 0);
  }
}
