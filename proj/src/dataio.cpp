#include "aog/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <utility>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aog {

namespace {

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error(path + ": read failed");
  return data;
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

// Shortest decimal form that parses back to the identical double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::logic_error("number formatting failed");
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_lines(const std::string& data) {
  std::vector<std::string> lines;
  std::string cur;
  for (const char ch : data) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::vector<std::string> tokenize(const std::string& line, const std::string& path, int lineno) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : line) {
    if (ch == ' ') {
      if (cur.empty()) fail_at(path, lineno, "malformed line: consecutive or leading spaces");
      tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (cur.empty()) fail_at(path, lineno, "malformed line: blank or trailing space");
  tokens.push_back(cur);
  return tokens;
}

double parse_double(const std::string& tok, const std::string& path, int lineno) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = first + tok.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    fail_at(path, lineno, "expected a finite number, got '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& path, int lineno) {
  long v = 0;
  const char* first = tok.data();
  const char* last = first + tok.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    fail_at(path, lineno, "expected an integer, got '" + tok + "'");
  return v;
}

// ---- binary container helpers (explicit little-endian) ----

void put_u32(std::string& s, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u64(std::string& s, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_i32(std::string& s, std::int32_t v) { put_u32(s, static_cast<std::uint32_t>(v)); }

void put_f64(std::string& s, double v) { put_u64(s, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct Cursor {
  const std::string& data;
  const std::string& path;
  std::size_t at = 0;
  std::size_t end = 0;

  void need(std::size_t k) const {
    if (at + k > end) throw std::runtime_error(path + ": malformed model container");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data[at++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[at + k])) << (8 * k);
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[at + k])) << (8 * k);
    at += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
};

const json& require_field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw std::runtime_error(path + ": missing field '" + std::string(key) + "'");
  return j.at(key);
}

double number_field(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_number()) throw std::runtime_error(path + ": field '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

SampleRecord load_sample(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) fail_at(path, 1, "empty file");

  const std::vector<std::string> head = tokenize(lines[0], path, 1);
  if (head.size() != 5 || head[0] != "AOGC") fail_at(path, 1, "not a contour sample file");
  if (head[1] != "1") fail_at(path, 1, "unsupported format version '" + head[1] + "'");

  SampleRecord rec;
  rec.id = fs::path(path).stem().string();
  rec.contours.width = parse_double(head[2], path, 1);
  rec.contours.height = parse_double(head[3], path, 1);
  if (!(rec.contours.width > 0.0) || !(rec.contours.height > 0.0))
    fail_at(path, 1, "canvas dimensions must be positive");
  if (head[4] == "+1")
    rec.label = 1;
  else if (head[4] == "-1")
    rec.label = -1;
  else
    fail_at(path, 1, "label must be +1 or -1, got '" + head[4] + "'");

  std::unordered_set<std::uint32_t> seen_ids;
  bool in_groundtruth = false;
  std::size_t li = 1;
  while (li < lines.size()) {
    const int lineno = static_cast<int>(li) + 1;
    const std::vector<std::string> toks = tokenize(lines[li], path, lineno);
    if (toks[0] == "C") {
      if (in_groundtruth) fail_at(path, lineno, "contour after ground-truth lines");
      if (toks.size() != 3) fail_at(path, lineno, "contour header needs 'C <id> <npoints>'");
      const long id = parse_long(toks[1], path, lineno);
      const long npoints = parse_long(toks[2], path, lineno);
      if (id < 0 || id > 0xffffffffL) fail_at(path, lineno, "contour id out of range");
      if (npoints < 2) fail_at(path, lineno, "contour needs at least two points");
      if (!seen_ids.insert(static_cast<std::uint32_t>(id)).second)
        fail_at(path, lineno, "duplicate contour id " + toks[1]);
      Contour c;
      c.id = static_cast<std::uint32_t>(id);
      for (long p = 0; p < npoints; ++p) {
        ++li;
        const int plineno = static_cast<int>(li) + 1;
        if (li >= lines.size()) fail_at(path, plineno, "missing point line");
        const std::vector<std::string> pt = tokenize(lines[li], path, plineno);
        if (pt.size() != 2) fail_at(path, plineno, "point line needs '<x> <y>'");
        const double x = parse_double(pt[0], path, plineno);
        const double y = parse_double(pt[1], path, plineno);
        if (x < 0.0 || x > rec.contours.width || y < 0.0 || y > rec.contours.height)
          fail_at(path, plineno,
                  "point (" + pt[0] + ", " + pt[1] + ") outside the canvas");
        c.points.push_back({x, y});
      }
      rec.contours.contours.push_back(std::move(c));
    } else if (toks[0] == "GT") {
      in_groundtruth = true;
      if (toks.size() != 5) fail_at(path, lineno, "ground truth needs 'GT <xmin> <ymin> <xmax> <ymax>'");
      BoundingBox b;
      b.xmin = parse_double(toks[1], path, lineno);
      b.ymin = parse_double(toks[2], path, lineno);
      b.xmax = parse_double(toks[3], path, lineno);
      b.ymax = parse_double(toks[4], path, lineno);
      if (b.xmax < b.xmin || b.ymax < b.ymin)
        fail_at(path, lineno, "ground-truth box has negative extent");
      rec.groundtruth.push_back(b);
    } else {
      fail_at(path, lineno, "unrecognized line starting with '" + toks[0] + "'");
    }
    ++li;
  }
  return rec;
}

void save_sample(const SampleRecord& rec, const std::string& path) {
  std::string out = "AOGC 1 " + fmt_double(rec.contours.width) + " " +
                    fmt_double(rec.contours.height) + " " + (rec.label > 0 ? "+1" : "-1") + "\n";
  for (const Contour& c : rec.contours.contours) {
    out += "C " + std::to_string(c.id) + " " + std::to_string(c.points.size()) + "\n";
    for (const Point& p : c.points) out += fmt_double(p.x) + " " + fmt_double(p.y) + "\n";
  }
  for (const BoundingBox& b : rec.groundtruth)
    out += "GT " + fmt_double(b.xmin) + " " + fmt_double(b.ymin) + " " + fmt_double(b.xmax) +
           " " + fmt_double(b.ymax) + "\n";
  write_file(path, out);
}

void save_model(const AndOrModel& model, const std::string& path) {
  const ModelConfig& cfg = model.config();
  const FeatureLayout& L = model.layout();
  std::string s = "AOGM";
  put_u32(s, 1);
  put_i32(s, cfg.or_count);
  put_i32(s, cfg.rows);
  put_i32(s, cfg.cols);
  put_i32(s, cfg.max_leaves);
  put_f64(s, cfg.window_w);
  put_f64(s, cfg.window_h);
  put_f64(s, cfg.displacement_radius);
  put_i32(s, cfg.sc.n_points);
  put_i32(s, cfg.sc.n_angles);
  put_i32(s, cfg.sc.n_radii);
  s.push_back(cfg.sc.log_radial ? 1 : 0);
  s.push_back(cfg.use_edges ? 1 : 0);
  for (int i = 0; i < cfg.or_count; ++i)
    for (int sl = 0; sl < cfg.max_leaves; ++sl) s.push_back(model.slot_live(i, sl) ? 1 : 0);
  put_u32(s, static_cast<std::uint32_t>(L.or_pairs.size()));
  for (const auto& [a, b] : L.or_pairs) {
    put_i32(s, a);
    put_i32(s, b);
  }
  put_u32(s, static_cast<std::uint32_t>(L.total));
  for (int j = 0; j < L.total; ++j) put_f64(s, model.omega()[j]);
  put_u64(s, fnv1a(s));
  write_file(path, s);
}

AndOrModel load_model(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 8) throw std::runtime_error(path + ": checksum mismatch (file truncated)");
  const std::string_view body(data.data(), data.size() - 8);
  std::uint64_t stored = 0;
  for (int k = 0; k < 8; ++k)
    stored |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(data[data.size() - 8 + static_cast<std::size_t>(k)]))
              << (8 * k);
  if (fnv1a(body) != stored) throw std::runtime_error(path + ": checksum mismatch");

  Cursor c{data, path, 0, body.size()};
  c.need(4);
  if (data.compare(0, 4, "AOGM") != 0) throw std::runtime_error(path + ": not a model container");
  c.at = 4;
  const std::uint32_t version = c.u32();
  if (version != 1)
    throw std::runtime_error(path + ": unsupported container version " + std::to_string(version));

  ModelConfig cfg;
  cfg.or_count = c.i32();
  cfg.rows = c.i32();
  cfg.cols = c.i32();
  cfg.max_leaves = c.i32();
  cfg.window_w = c.f64();
  cfg.window_h = c.f64();
  cfg.displacement_radius = c.f64();
  cfg.sc.n_points = c.i32();
  cfg.sc.n_angles = c.i32();
  cfg.sc.n_radii = c.i32();
  cfg.sc.log_radial = c.u8() != 0;
  cfg.use_edges = c.u8() != 0;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid stored configuration: " + e.what());
  }

  AndOrModel model(cfg);
  const FeatureLayout& L = model.layout();
  std::vector<std::uint8_t> live;
  live.reserve(static_cast<std::size_t>(cfg.or_count * cfg.max_leaves));
  for (int i = 0; i < cfg.or_count * cfg.max_leaves; ++i) live.push_back(c.u8());
  const std::uint32_t pair_count = c.u32();
  if (pair_count != L.or_pairs.size())
    throw std::runtime_error(path + ": stored adjacency disagrees with the configuration");
  for (const auto& [a, b] : L.or_pairs)
    if (c.i32() != a || c.i32() != b)
      throw std::runtime_error(path + ": stored adjacency disagrees with the configuration");
  const std::uint32_t omega_len = c.u32();
  if (omega_len != static_cast<std::uint32_t>(L.total))
    throw std::runtime_error(path + ": stored weight length disagrees with the configuration");
  Eigen::VectorXd omega(L.total);
  for (int j = 0; j < L.total; ++j) omega[j] = c.f64();
  if (c.at != c.end) throw std::runtime_error(path + ": trailing bytes in model container");

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(L.leaf_dim);
  for (int i = 0; i < cfg.or_count; ++i)
    for (int sl = 0; sl < cfg.max_leaves; ++sl) model.create_leaf(i, zero);
  for (int i = 0; i < cfg.or_count; ++i)
    for (int sl = 0; sl < cfg.max_leaves; ++sl)
      if (!live[static_cast<std::size_t>(i * cfg.max_leaves + sl)]) model.remove_leaf(i, sl);
  model.set_omega(omega);
  return model;
}

DatasetManifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  const json& version = require_field(j, "version", path);
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw std::runtime_error(path + ": unsupported manifest version");
  const json& samples = require_field(j, "samples", path);
  if (!samples.is_array()) throw std::runtime_error(path + ": 'samples' must be an array");

  DatasetManifest man;
  man.version = 1;
  man.directory = fs::path(path).parent_path().string();
  std::unordered_set<std::string> ids;
  for (const json& e : samples) {
    ManifestEntry entry;
    for (const char* key : {"id", "path", "split"}) {
      const json& v = require_field(e, key, path);
      if (!v.is_string())
        throw std::runtime_error(path + ": field '" + key + "' must be a string");
    }
    entry.id = e.at("id").get<std::string>();
    entry.path = e.at("path").get<std::string>();
    entry.split = e.at("split").get<std::string>();
    if (entry.split != "train" && entry.split != "test")
      throw std::runtime_error(path + ": split of '" + entry.id + "' must be train or test");
    if (!ids.insert(entry.id).second)
      throw std::runtime_error(path + ": duplicate sample id '" + entry.id + "'");
    const fs::path full = fs::path(man.directory) / entry.path;
    if (!fs::exists(full))
      throw std::runtime_error(path + ": sample file missing: " + entry.path);
    man.samples.push_back(std::move(entry));
  }
  return man;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  json samples = json::array();
  for (const ManifestEntry& e : manifest.samples)
    samples.push_back({{"id", e.id}, {"path", e.path}, {"split", e.split}});
  const json j{{"version", manifest.version}, {"samples", samples}};
  write_file(path, j.dump(2) + "\n");
}

std::string manifest_sample_path(const DatasetManifest& manifest, const ManifestEntry& entry) {
  if (manifest.directory.empty()) return entry.path;
  return (fs::path(manifest.directory) / entry.path).string();
}

SynthSpec load_synth_spec(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  SynthSpec spec;
  const json& canvas = require_field(j, "canvas", path);
  if (!canvas.is_array() || canvas.size() != 2 || !canvas[0].is_number() || !canvas[1].is_number())
    throw std::runtime_error(path + ": 'canvas' must be [width, height]");
  spec.canvas_w = canvas[0].get<double>();
  spec.canvas_h = canvas[1].get<double>();
  if (!(spec.canvas_w > 0.0) || !(spec.canvas_h > 0.0))
    throw std::runtime_error(path + ": canvas dimensions must be positive");
  spec.jitter = number_field(j, "jitter", path);
  if (spec.jitter < 0.0) throw std::runtime_error(path + ": jitter must be non-negative");
  spec.occlusion = number_field(j, "occlusion", path);
  if (spec.occlusion < 0.0 || spec.occlusion > 1.0)
    throw std::runtime_error(path + ": occlusion must lie in [0, 1]");
  const json& clutter = require_field(j, "clutter", path);
  if (!clutter.is_array() || clutter.size() != 2 || !clutter[0].is_number_integer() ||
      !clutter[1].is_number_integer())
    throw std::runtime_error(path + ": 'clutter' must be [lo, hi]");
  spec.clutter_lo = clutter[0].get<int>();
  spec.clutter_hi = clutter[1].get<int>();
  if (spec.clutter_lo < 0 || spec.clutter_hi < spec.clutter_lo)
    throw std::runtime_error(path + ": clutter range must satisfy 0 <= lo <= hi");
  const json& seed = require_field(j, "seed", path);
  if (!seed.is_number_integer())
    throw std::runtime_error(path + ": 'seed' must be an integer");
  spec.seed = seed.get<std::uint64_t>();
  const json& classes = require_field(j, "classes", path);
  if (!classes.is_array() || classes.empty())
    throw std::runtime_error(path + ": 'classes' must be a non-empty array");
  for (const json& cj : classes) {
    const json& contours = require_field(cj, "contours", path);
    if (!contours.is_array() || contours.empty())
      throw std::runtime_error(path + ": each class needs a non-empty 'contours' array");
    SynthClass cls;
    std::uint32_t next_id = 0;
    for (const json& pts : contours) {
      if (!pts.is_array() || pts.size() < 2)
        throw std::runtime_error(path + ": each template contour needs at least two points");
      Contour c;
      c.id = next_id++;
      for (const json& p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          throw std::runtime_error(path + ": template points must be [x, y] pairs");
        c.points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      cls.contours.push_back(std::move(c));
    }
    spec.classes.push_back(std::move(cls));
  }
  return spec;
}

void save_synth_spec(const SynthSpec& spec, const std::string& path) {
  json classes = json::array();
  for (const SynthClass& cls : spec.classes) {
    json contours = json::array();
    for (const Contour& c : cls.contours) {
      json pts = json::array();
      for (const Point& p : c.points) pts.push_back({p.x, p.y});
      contours.push_back(pts);
    }
    classes.push_back({{"contours", contours}});
  }
  const json j{{"canvas", {spec.canvas_w, spec.canvas_h}},
               {"jitter", spec.jitter},
               {"occlusion", spec.occlusion},
               {"clutter", {spec.clutter_lo, spec.clutter_hi}},
               {"seed", spec.seed},
               {"classes", classes}};
  write_file(path, j.dump(2) + "\n");
}

ContourSet synth_positive(const SynthSpec& spec, int class_idx, std::mt19937_64& rng,
                          std::vector<BoundingBox>* groundtruth) {
  if (class_idx < 0 || class_idx >= static_cast<int>(spec.classes.size()))
    throw std::invalid_argument("synth_positive: class index out of range");
  const SynthClass& cls = spec.classes[static_cast<std::size_t>(class_idx)];

  // Jitter first (x then y per vertex, contours in order), then the
  // translation draws, then one occlusion draw per contour.
  std::vector<Contour> shaped = cls.contours;
  if (spec.jitter > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.jitter);
    for (Contour& c : shaped)
      for (Point& p : c.points) {
        p.x += noise(rng);
        p.y += noise(rng);
      }
  }

  double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
  double miny = minx, maxy = maxx;
  for (const Contour& c : shaped)
    for (const Point& p : c.points) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
  if (!(minx <= maxx)) throw std::invalid_argument("synth_positive: class template has no points");

  const double lox = -minx, loy = -miny;
  const double hix = std::max(spec.canvas_w - maxx, lox);
  const double hiy = std::max(spec.canvas_h - maxy, loy);
  const double tx = std::uniform_real_distribution<double>(lox, hix)(rng);
  const double ty = std::uniform_real_distribution<double>(loy, hiy)(rng);

  ContourSet out{spec.canvas_w, spec.canvas_h, {}};
  std::bernoulli_distribution drop(spec.occlusion);
  std::uint32_t next_id = 0;
  for (Contour& c : shaped) {
    const bool dead = drop(rng);
    if (dead) continue;
    Contour moved;
    moved.id = next_id++;
    for (const Point& p : c.points)
      moved.points.push_back({std::clamp(p.x + tx, 0.0, spec.canvas_w),
                              std::clamp(p.y + ty, 0.0, spec.canvas_h)});
    out.contours.push_back(std::move(moved));
  }
  if (groundtruth)
    groundtruth->push_back({std::clamp(minx + tx, 0.0, spec.canvas_w),
                            std::clamp(miny + ty, 0.0, spec.canvas_h),
                            std::clamp(maxx + tx, 0.0, spec.canvas_w),
                            std::clamp(maxy + ty, 0.0, spec.canvas_h)});
  return out;
}

ContourSet synth_negative(const SynthSpec& spec, std::mt19937_64& rng) {
  ContourSet out{spec.canvas_w, spec.canvas_h, {}};
  const int count =
      std::uniform_int_distribution<int>(spec.clutter_lo, spec.clutter_hi)(rng);
  const double margin = 0.25 * std::min(spec.canvas_w, spec.canvas_h);
  const double pi = 3.14159265358979323846;
  for (int f = 0; f < count; ++f) {
    const int kind = std::uniform_int_distribution<int>(0, 1)(rng);
    const double cx =
        std::uniform_real_distribution<double>(margin, spec.canvas_w - margin)(rng);
    const double cy =
        std::uniform_real_distribution<double>(margin, spec.canvas_h - margin)(rng);
    Contour c;
    c.id = static_cast<std::uint32_t>(f);
    if (kind == 0) {
      const double ang = std::uniform_real_distribution<double>(0.0, 2.0 * pi)(rng);
      const double len =
          std::uniform_real_distribution<double>(0.3 * margin, 0.9 * margin)(rng);
      const double dx = 0.5 * len * std::cos(ang), dy = 0.5 * len * std::sin(ang);
      for (int t = 0; t < 5; ++t) {
        const double u = -1.0 + 0.5 * t;  // -1 .. 1
        c.points.push_back({std::clamp(cx + u * dx, 0.0, spec.canvas_w),
                            std::clamp(cy + u * dy, 0.0, spec.canvas_h)});
      }
    } else {
      const double r = std::uniform_real_distribution<double>(0.3 * margin, 0.8 * margin)(rng);
      const double a0 = std::uniform_real_distribution<double>(0.0, 2.0 * pi)(rng);
      const double span = std::uniform_real_distribution<double>(0.25 * pi, pi)(rng);
      for (int t = 0; t < 6; ++t) {
        const double a = a0 + span * t / 5.0;
        c.points.push_back({std::clamp(cx + r * std::cos(a), 0.0, spec.canvas_w),
                            std::clamp(cy + r * std::sin(a), 0.0, spec.canvas_h)});
      }
    }
    out.contours.push_back(std::move(c));
  }
  return out;
}

DatasetManifest generate_dataset(const SynthSpec& spec, const SynthCounts& counts,
                                 const std::string& dir) {
  if (spec.classes.empty())
    throw std::invalid_argument("generate_dataset: the spec has no template classes");
  if (counts.train_pos < 0 || counts.train_neg < 0 || counts.test_pos < 0 || counts.test_neg < 0)
    throw std::invalid_argument("generate_dataset: sample counts must be non-negative");
  fs::create_directories(dir);

  DatasetManifest man;
  man.version = 1;
  man.directory = dir;

  const auto pad3 = [](int k) {
    std::string s = std::to_string(k);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return s;
  };
  const auto emit = [&](const SampleRecord& rec, const std::string& split) {
    const std::string file = rec.id + ".aogc";
    save_sample(rec, (fs::path(dir) / file).string());
    man.samples.push_back({rec.id, file, split});
  };
  const auto run_split = [&](const std::string& split, std::uint64_t seed, int n_pos, int n_neg) {
    std::mt19937_64 rng(seed);
    const int n_classes = static_cast<int>(spec.classes.size());
    for (int k = 0; k < n_pos; ++k) {
      SampleRecord rec;
      rec.id = split + "_pos_" + pad3(k);
      rec.label = 1;
      rec.contours = synth_positive(spec, k % n_classes, rng, &rec.groundtruth);
      emit(rec, split);
    }
    for (int k = 0; k < n_neg; ++k) {
      SampleRecord rec;
      rec.id = split + "_neg_" + pad3(k);
      rec.label = -1;
      rec.contours = synth_negative(spec, rng);
      emit(rec, split);
    }
  };
  run_split("train", spec.seed, counts.train_pos, counts.train_neg);
  run_split("test", spec.seed + 1, counts.test_pos, counts.test_neg);
  save_manifest(man, (fs::path(dir) / "manifest.json").string());
  return man;
}

}  // namespace aog
