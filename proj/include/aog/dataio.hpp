#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aog/geometry.hpp"
#include "aog/model.hpp"

namespace aog {

// One training or evaluation image: its contour map, a label, and (usually
// for positives) ground-truth object boxes. Positive training records are
// expected to be clutter-free; that is a dataset convention, not something
// the loader enforces.
struct SampleRecord {
  std::string id;  // file stem when loaded from disk
  int label = 1;   // +1 or -1
  ContourSet contours;
  std::vector<BoundingBox> groundtruth;
};

// Reads/writes the plain-text sample format:
//   AOGC 1 <width> <height> <label>
//   C <id> <npoints>
//   <x> <y>            (one line per point)
//   ...
//   GT <xmin> <ymin> <xmax> <ymax>
// Numbers use the shortest decimal encoding that round-trips exactly, so
// save -> load -> save reproduces the file byte for byte. Malformed input,
// an unsupported version, and out-of-canvas points raise std::runtime_error
// naming the offending line.
SampleRecord load_sample(const std::string& path);
void save_sample(const SampleRecord& rec, const std::string& path);

// Versioned binary model container with explicit little-endian 64-bit
// reals: configuration, live-slot map, pair list, weights, and a trailing
// checksum. A loaded model reproduces every score of the saved one to the
// bit. Corruption or truncation fails the checksum; an unknown version is
// reported as such.
void save_model(const AndOrModel& model, const std::string& path);
AndOrModel load_model(const std::string& path);

struct ManifestEntry {
  std::string id;
  std::string path;   // relative to the manifest's directory
  std::string split;  // "train" or "test"
};

// Dataset index stored as JSON next to the sample files.
struct DatasetManifest {
  int version = 1;
  std::string directory;  // parent of the manifest file; set on load
  std::vector<ManifestEntry> samples;
};

// Loading validates the version, id uniqueness, and that every referenced
// file exists relative to the manifest. `directory` is not serialized.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// Joins a manifest entry path to the manifest's directory.
std::string manifest_sample_path(const DatasetManifest& manifest, const ManifestEntry& entry);

// Template polylines of one object style.
struct SynthClass {
  std::vector<Contour> contours;
};

// Recipe for the synthetic contour dataset. The seed fully determines the
// generated samples.
struct SynthSpec {
  double canvas_w = 0.0;
  double canvas_h = 0.0;
  double jitter = 0.0;     // per-vertex coordinate noise stddev
  double occlusion = 0.0;  // per-contour drop probability
  int clutter_lo = 0;      // clutter fragments per negative, inclusive range
  int clutter_hi = 0;
  std::uint64_t seed = 0;
  std::vector<SynthClass> classes;
};

// JSON form:
//   {"canvas": [w, h], "jitter": s, "occlusion": p, "clutter": [lo, hi],
//    "seed": n, "classes": [{"contours": [[[x, y], ...], ...]}, ...]}
SynthSpec load_synth_spec(const std::string& path);
void save_synth_spec(const SynthSpec& spec, const std::string& path);

// One positive: the class template with per-vertex jitter, a uniform random
// translation keeping the jittered bounds inside the canvas, then
// per-contour occlusion drops. `groundtruth` (when given) receives the
// translated jittered template bounds, taken before any drop. Draw order is
// fixed, so outputs are pure functions of the generator state.
ContourSet synth_positive(const SynthSpec& spec, int class_idx, std::mt19937_64& rng,
                          std::vector<BoundingBox>* groundtruth);

// One negative: clutter only — a uniform count of short random segments and
// circular arcs placed away from the canvas border.
ContourSet synth_negative(const SynthSpec& spec, std::mt19937_64& rng);

struct SynthCounts {
  int train_pos = 0;
  int train_neg = 0;
  int test_pos = 0;
  int test_neg = 0;
};

// Writes sample files plus manifest.json into `dir` (created if missing)
// and returns the manifest. Positives cycle through the classes in order.
// The train split consumes a generator seeded with spec.seed, the test
// split one seeded with spec.seed + 1, so the two splits are independent
// and the whole dataset is reproducible.
DatasetManifest generate_dataset(const SynthSpec& spec, const SynthCounts& counts,
                                 const std::string& dir);

}  // namespace aog
