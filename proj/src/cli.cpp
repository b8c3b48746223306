#include "aog/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aog/dataio.hpp"
#include "aog/evalmetrics.hpp"
#include "aog/inference.hpp"
#include "aog/trainer.hpp"
#include "json.hpp"

namespace aog {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

// Strict single-space tokenization, matching the sample text format.
std::vector<std::string> tokenize(const std::string& path, int line_no, const std::string& line) {
  if (line.empty()) fail_at(path, line_no, "blank line");
  if (line.front() == ' ' || line.back() == ' ')
    fail_at(path, line_no, "leading or trailing space");
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t sp = line.find(' ', start);
    if (sp == std::string::npos) sp = line.size();
    if (sp == start) fail_at(path, line_no, "consecutive spaces");
    out.push_back(line.substr(start, sp - start));
    start = sp + 1;
  }
  return out;
}

double parse_double(const std::string& path, int line_no, const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
    fail_at(path, line_no, "malformed number '" + tok + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Config file: one JSON object with optional "model", "train", "detect"
// sections. Unknown keys are rejected so typos cannot silently fall back to
// defaults.

struct CliConfig {
  ModelConfig model;
  TrainOptions train;
  DetectOptions detect;
};

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::runtime_error(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void get_to_if(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) it->get_to(out);
}

CliConfig load_cli_config(const std::string& path) {
  CliConfig cfg;
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  try {
    if (!root.is_object()) throw std::runtime_error("top level must be an object");
    reject_unknown(root, "config", {"model", "train", "detect"});
    if (auto it = root.find("model"); it != root.end()) {
      const json& m = *it;
      reject_unknown(m, "config model",
                     {"rows", "cols", "max_leaves", "window_w", "window_h", "displacement_radius",
                      "use_edges", "descriptor"});
      get_to_if(m, "rows", cfg.model.rows);
      get_to_if(m, "cols", cfg.model.cols);
      get_to_if(m, "max_leaves", cfg.model.max_leaves);
      get_to_if(m, "window_w", cfg.model.window_w);
      get_to_if(m, "window_h", cfg.model.window_h);
      get_to_if(m, "displacement_radius", cfg.model.displacement_radius);
      get_to_if(m, "use_edges", cfg.model.use_edges);
      if (auto d = m.find("descriptor"); d != m.end()) {
        reject_unknown(*d, "config model descriptor", {"points", "angles", "radii", "log_radial"});
        get_to_if(*d, "points", cfg.model.sc.n_points);
        get_to_if(*d, "angles", cfg.model.sc.n_angles);
        get_to_if(*d, "radii", cfg.model.sc.n_radii);
        get_to_if(*d, "log_radial", cfg.model.sc.log_radial);
      }
      cfg.model.or_count = cfg.model.rows * cfg.model.cols;
    }
    if (auto it = root.find("train"); it != root.end()) {
      const json& t = *it;
      reject_unknown(t, "config train",
                     {"penalty", "creation_cap", "removal_cap", "sigma", "delta", "rel_tol",
                      "max_iterations", "stride_mult", "clustering", "solver"});
      get_to_if(t, "penalty", cfg.train.penalty);
      get_to_if(t, "creation_cap", cfg.train.creation_cap);
      get_to_if(t, "removal_cap", cfg.train.removal_cap);
      get_to_if(t, "sigma", cfg.train.sigma);
      get_to_if(t, "delta", cfg.train.delta);
      get_to_if(t, "rel_tol", cfg.train.rel_tol);
      get_to_if(t, "max_iterations", cfg.train.max_iterations);
      get_to_if(t, "stride_mult", cfg.train.stride_mult);
      if (auto c = t.find("clustering"); c != t.end()) {
        reject_unknown(*c, "config train clustering",
                       {"split_stddev", "merge_distance", "min_fraction", "max_iterations"});
        get_to_if(*c, "split_stddev", cfg.train.clustering.split_stddev);
        get_to_if(*c, "merge_distance", cfg.train.clustering.merge_distance);
        get_to_if(*c, "min_fraction", cfg.train.clustering.min_fraction);
        get_to_if(*c, "max_iterations", cfg.train.clustering.max_iterations);
      }
      if (auto s = t.find("solver"); s != t.end()) {
        reject_unknown(*s, "config train solver",
                       {"eps_violation", "eps_kkt", "max_rounds", "max_sweeps", "prune_below",
                        "prune_every"});
        get_to_if(*s, "eps_violation", cfg.train.solver.eps_violation);
        get_to_if(*s, "eps_kkt", cfg.train.solver.eps_kkt);
        get_to_if(*s, "max_rounds", cfg.train.solver.max_rounds);
        get_to_if(*s, "max_sweeps", cfg.train.solver.max_sweeps);
        get_to_if(*s, "prune_below", cfg.train.solver.prune_below);
        get_to_if(*s, "prune_every", cfg.train.solver.prune_every);
      }
    }
    if (auto it = root.find("detect"); it != root.end()) {
      const json& d = *it;
      reject_unknown(d, "config detect",
                     {"num_scales", "per_octave", "threshold", "nms_iou", "prune", "stride_mult"});
      get_to_if(d, "num_scales", cfg.detect.num_scales);
      get_to_if(d, "per_octave", cfg.detect.per_octave);
      get_to_if(d, "threshold", cfg.detect.threshold);
      get_to_if(d, "nms_iou", cfg.detect.nms_iou);
      get_to_if(d, "prune", cfg.detect.prune);
      get_to_if(d, "stride_mult", cfg.detect.stride_mult);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared data plumbing.

struct LoadedSplit {
  std::vector<std::string> ids;          // manifest order
  std::vector<SampleRecord> samples;     // same order
};

LoadedSplit load_split(const DatasetManifest& manifest, const std::string& split) {
  LoadedSplit out;
  for (const ManifestEntry& e : manifest.samples) {
    if (split != "all" && e.split != split) continue;
    out.ids.push_back(e.id);
    out.samples.push_back(load_sample(manifest_sample_path(manifest, e)));
  }
  return out;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string detection_line(const std::string& id, double score, const BoundingBox& b) {
  return id + " " + fmt_double(score) + " " + fmt_double(b.xmin) + " " + fmt_double(b.ymin) + " " +
         fmt_double(b.xmax) + " " + fmt_double(b.ymax) + "\n";
}

struct ParsedDetections {
  std::vector<RankedDetection> all;
  std::map<std::string, std::vector<RankedDetection>> by_image;
};

ParsedDetections parse_detections(const std::string& path,
                                  const std::vector<ImageGroundTruth>& groundtruth) {
  ParsedDetections out;
  std::string data = read_file(path);
  std::vector<std::string> known;
  known.reserve(groundtruth.size());
  for (const ImageGroundTruth& g : groundtruth) known.push_back(g.image);
  std::sort(known.begin(), known.end());

  int line_no = 0;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t nl = data.find('\n', start);
    if (nl == std::string::npos) nl = data.size();
    std::string line = data.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    std::vector<std::string> tok = tokenize(path, line_no, line);
    if (tok.size() != 6)
      fail_at(path, line_no, "expected 'id score xmin ymin xmax ymax'");
    if (!std::binary_search(known.begin(), known.end(), tok[0]))
      fail_at(path, line_no, "unknown image id '" + tok[0] + "'");
    RankedDetection d;
    d.image = tok[0];
    d.score = parse_double(path, line_no, tok[1]);
    d.box.xmin = parse_double(path, line_no, tok[2]);
    d.box.ymin = parse_double(path, line_no, tok[3]);
    d.box.xmax = parse_double(path, line_no, tok[4]);
    d.box.ymax = parse_double(path, line_no, tok[5]);
    if (d.box.xmax < d.box.xmin || d.box.ymax < d.box.ymin)
      fail_at(path, line_no, "box extent is negative");
    out.by_image[d.image].push_back(d);
    out.all.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each throws std::runtime_error on data problems.

struct GlobalFlags {
  long long seed = -1;
  bool seed_set = false;
  int threads = 1;  // accepted for interface stability; pipelines run serially
  std::string config_path;

  CliConfig config() const {
    return config_path.empty() ? CliConfig{} : load_cli_config(config_path);
  }
};

void cmd_synth(const GlobalFlags& g, const std::string& spec_path, const std::string& out_dir,
               const SynthCounts& counts, std::ostream& out) {
  SynthSpec spec = load_synth_spec(spec_path);
  if (g.seed_set) spec.seed = static_cast<std::uint64_t>(g.seed);
  DatasetManifest manifest = generate_dataset(spec, counts, out_dir);
  int train_n = 0, test_n = 0;
  for (const ManifestEntry& e : manifest.samples) (e.split == "train" ? train_n : test_n)++;
  out << "train: " << train_n << " samples\n";
  out << "test: " << test_n << " samples\n";
  out << "manifest: " << (std::filesystem::path(out_dir) / "manifest.json").string() << "\n";
}

json report_json(const TrainReport& report) {
  json rep;
  rep["converged"] = report.converged;
  rep["final_objective"] = report.final_objective;
  rep["iteration_count"] = report.iterations.size();
  rep["zero_feature_or_nodes"] = report.zero_feature_or_nodes;
  json items = json::array();
  for (const IterationRecord& r : report.iterations) {
    json it;
    it["objective"] = r.objective;
    it["creations"] = r.creations;
    it["removals"] = r.removals;
    it["moves"] = r.moves;
    it["solver_rounds"] = r.solver_rounds;
    it["constraints"] = r.constraints;
    it["plan_empty"] = r.plan_empty;
    it["accepted"] = r.accepted;
    it["surrogate_old"] = r.surrogate_old;
    it["surrogate_new"] = r.surrogate_new;
    items.push_back(std::move(it));
  }
  rep["iterations"] = std::move(items);
  return rep;
}

void cmd_train(const GlobalFlags& g, const std::string& manifest_path,
               const std::string& model_out, const std::string& report_out, int max_iter_override,
               bool no_edges, std::ostream& out) {
  CliConfig cfg = g.config();
  if (max_iter_override > 0) cfg.train.max_iterations = max_iter_override;
  if (no_edges) cfg.model.use_edges = false;

  DatasetManifest manifest = load_manifest(manifest_path);
  LoadedSplit split = load_split(manifest, "train");
  std::vector<ContourSet> positives, negatives;
  for (const SampleRecord& rec : split.samples)
    (rec.label > 0 ? positives : negatives).push_back(rec.contours);
  out << "training on " << positives.size() << " positives, " << negatives.size()
      << " negatives\n";

  cfg.train.log = &out;
  auto run_train = [&]() -> TrainResult {
    try {
      return train(cfg.model, positives, negatives, cfg.train);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(manifest_path + ": " + e.what());
    }
  };
  TrainResult res = run_train();
  save_model(res.model, model_out);
  out << (res.report.converged ? "converged" : "stopped") << " after "
      << res.report.iterations.size() << " iterations, objective "
      << fmt_double(res.report.final_objective) << "\n";
  out << "model: " << model_out << "\n";
  if (!report_out.empty()) {
    write_file(report_out, report_json(res.report).dump(2) + "\n");
    out << "report: " << report_out << "\n";
  }
}

void cmd_detect(const GlobalFlags& g, const std::string& model_path, const std::string& data_path,
                const std::string& split, const std::string& out_path, std::ostream& out) {
  CliConfig cfg = g.config();
  AndOrModel model = load_model(model_path);

  std::vector<std::pair<std::string, const ContourSet*>> images;
  LoadedSplit loaded;
  SampleRecord single;
  if (data_path.size() > 5 && data_path.substr(data_path.size() - 5) == ".json") {
    DatasetManifest manifest = load_manifest(data_path);
    loaded = load_split(manifest, split);
    for (std::size_t i = 0; i < loaded.samples.size(); ++i)
      images.emplace_back(loaded.ids[i], &loaded.samples[i].contours);
  } else {
    single = load_sample(data_path);
    images.emplace_back(stem_of(data_path), &single.contours);
  }

  std::string text;
  for (const auto& [id, contours] : images) {
    std::vector<Detection> dets = detect(*contours, model, cfg.detect);
    for (const Detection& d : dets) text += detection_line(id, d.score, d.box);
  }
  if (out_path.empty())
    out << text;
  else {
    write_file(out_path, text);
    out << "detections: " << out_path << "\n";
  }
}

void cmd_eval(const GlobalFlags& g, const std::string& dets_path, const std::string& manifest_path,
              const std::string& split, double iou_thresh, bool top1, const std::string& fppi_csv,
              const std::string& pr_csv, const std::string& pr_svg, const std::string& overlay_dir,
              std::ostream& out) {
  (void)g;
  DatasetManifest manifest = load_manifest(manifest_path);
  LoadedSplit loaded = load_split(manifest, split);
  std::vector<ImageGroundTruth> gt;
  gt.reserve(loaded.samples.size());
  for (std::size_t i = 0; i < loaded.samples.size(); ++i)
    gt.push_back({loaded.ids[i], loaded.samples[i].groundtruth});

  ParsedDetections dets = parse_detections(dets_path, gt);
  EvalCurve curve = evaluate(dets.all, gt, iou_thresh);
  out << "AP " << fmt_fixed4(curve.ap) << "\n";
  if (top1) out << "top1-accuracy " << fmt_fixed4(top1_accuracy(dets.all, gt, iou_thresh)) << "\n";

  if (!fppi_csv.empty()) write_file(fppi_csv, curve_csv_fppi(curve));
  if (!pr_csv.empty()) write_file(pr_csv, curve_csv_pr(curve));
  if (!pr_svg.empty()) write_file(pr_svg, pr_curve_svg(curve));
  if (!overlay_dir.empty()) {
    std::filesystem::create_directories(overlay_dir);
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
      const std::string& id = loaded.ids[i];
      auto it = dets.by_image.find(id);
      static const std::vector<RankedDetection> none;
      const std::vector<RankedDetection>& mine = it == dets.by_image.end() ? none : it->second;
      write_file((std::filesystem::path(overlay_dir) / (id + ".svg")).string(),
                 overlay_svg(loaded.samples[i].contours, loaded.samples[i].groundtruth, mine));
    }
  }
}

void cmd_inspect(const std::string& model_path, std::ostream& out) {
  AndOrModel model = load_model(model_path);
  const ModelConfig& cfg = model.config();
  const FeatureLayout& L = model.layout();
  const Eigen::VectorXd& w = model.omega();

  out << "grid " << cfg.rows << "x" << cfg.cols << ", " << cfg.max_leaves
      << " leaf slots per or-node\n";
  out << "window " << fmt_double(cfg.window_w) << "x" << fmt_double(cfg.window_h)
      << ", displacement radius " << fmt_double(cfg.disp_radius()) << "\n";
  out << "descriptor: " << cfg.sc.n_points << " points x " << cfg.sc.n_angles << " angles x "
      << cfg.sc.n_radii << " radii (" << (cfg.sc.log_radial ? "octave" : "linear")
      << " radial bins)\n";
  out << "edges: " << (cfg.use_edges ? "enabled" : "disabled (tree ablation)") << ", "
      << L.or_pairs.size() << " adjacent pairs, " << L.edge_count << " pair weights\n";
  out << "live leaves: " << model.total_live() << " of " << cfg.slot_count() << "\n";
  for (int i = 0; i < cfg.or_count; ++i) {
    out << "or-node " << i << " (row " << i / cfg.cols << ", col " << i % cfg.cols << "): "
        << model.live_count(i) << " live [";
    bool first = true;
    for (int s : model.live_slots(i)) {
      if (!first) out << " ";
      first = false;
      out << s;
    }
    out << "]\n";
  }
  int leaf_len = L.or_count * L.max_leaves * L.leaf_dim;
  out << "weight norms: leaves " << fmt_double(w.segment(0, leaf_len).norm()) << ", displacement "
      << fmt_double(w.segment(L.deform_offset(0), 4 * L.or_count).norm()) << ", edges "
      << fmt_double(w.segment(L.edge_base(), L.edge_count).norm()) << ", root "
      << fmt_double(w.segment(L.root_offset(), L.root_dim).norm()) << ", total "
      << fmt_double(w.norm()) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contour-based shape detector: train, detect, evaluate"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Override the generation seed")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app.add_option("--threads", g.threads, "Worker thread budget (pipelines currently run serially)");
  app.add_option("--config", g.config_path, "JSON config file (model/train/detect sections)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a spec file");
  std::string synth_spec, synth_out;
  SynthCounts counts{60, 60, 40, 40};
  synth->add_option("spec", synth_spec, "Generation spec (JSON)")->required();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--train-pos", counts.train_pos, "Training positives");
  synth->add_option("--train-neg", counts.train_neg, "Training negatives");
  synth->add_option("--test-pos", counts.test_pos, "Test positives");
  synth->add_option("--test-neg", counts.test_neg, "Test negatives");
  synth->callback([&] { cmd_synth(g, synth_spec, synth_out, counts, out); });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on the manifest's train split");
  std::string train_manifest, train_model_out, train_report;
  int train_max_iter = 0;
  bool train_no_edges = false;
  train_cmd->add_option("manifest", train_manifest, "Dataset manifest (JSON)")->required();
  train_cmd->add_option("--model-out", train_model_out, "Output model container")->required();
  train_cmd->add_option("--report", train_report, "Write a JSON training report here");
  train_cmd->add_option("--max-iterations", train_max_iter, "Override the iteration cap");
  train_cmd->add_flag("--no-edges", train_no_edges,
                      "Pin pairwise co-activation weights to zero (tree ablation)");
  train_cmd->callback([&] {
    cmd_train(g, train_manifest, train_model_out, train_report, train_max_iter, train_no_edges,
              out);
  });

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Run the detector over samples");
  std::string det_model, det_data, det_split = "test", det_out;
  detect_cmd->add_option("model", det_model, "Model container")->required();
  detect_cmd->add_option("data", det_data, "Dataset manifest (.json) or a single sample file")
      ->required();
  detect_cmd->add_option("--split", det_split, "Manifest split: train, test, or all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  detect_cmd->add_option("--out", det_out, "Write detection lines here instead of stdout");
  detect_cmd->callback([&] { cmd_detect(g, det_model, det_data, det_split, det_out, out); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a detections file against ground truth");
  std::string ev_dets, ev_manifest, ev_split = "test";
  std::string ev_fppi_csv, ev_pr_csv, ev_pr_svg, ev_overlay;
  double ev_iou = 0.5;
  bool ev_top1 = false;
  eval_cmd->add_option("detections", ev_dets, "Detection lines file")->required();
  eval_cmd->add_option("manifest", ev_manifest, "Dataset manifest (JSON)")->required();
  eval_cmd->add_option("--split", ev_split, "Manifest split: train, test, or all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  eval_cmd->add_option("--iou", ev_iou, "Overlap threshold for a correct detection");
  eval_cmd->add_flag("--top1-accuracy", ev_top1,
                     "Also report accuracy of each image's highest-scoring detection");
  eval_cmd->add_option("--fppi-csv", ev_fppi_csv, "Write the FPPI-recall curve CSV here");
  eval_cmd->add_option("--pr-csv", ev_pr_csv, "Write the recall-precision curve CSV here");
  eval_cmd->add_option("--pr-svg", ev_pr_svg, "Write a PR curve SVG plot here");
  eval_cmd->add_option("--overlay-dir", ev_overlay, "Write per-image overlay SVGs here");
  eval_cmd->callback([&] {
    cmd_eval(g, ev_dets, ev_manifest, ev_split, ev_iou, ev_top1, ev_fppi_csv, ev_pr_csv, ev_pr_svg,
             ev_overlay, out);
  });

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a model container");
  std::string ins_model;
  inspect_cmd->add_option("model", ins_model, "Model container")->required();
  inspect_cmd->callback([&] { cmd_inspect(ins_model, out); });

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("aogdet");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace aog
