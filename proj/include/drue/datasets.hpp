#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/tensor.hpp"

namespace drue {

struct Sample {
  std::string id;
  Tensor image;  // [3,S,S] in [0,1]
  int label = -1;
  std::string source;
};

struct SplitSet {
  std::vector<Sample> train, val, test;
};

// Class rule for the synthetic fundus-like images: a cup filling more than
// 0.6 of the disc radius is class 1.
int label_for_ratio(double cup_to_disc);

// Textured background + dark vessel curves + bright disc with a concentric
// brighter cup. Stratified 80/10/10 split per class.
SplitSet generate_synthetic(int n_per_class, int image_size, uint64_t seed);

enum class Corruption {
  gaussian_noise,
  blur,
  hue_shift,
  contrast,
  uniform_noise_replace,
};

Corruption corruption_from_string(const std::string& name);
std::string to_string(Corruption kind);

// Severity in [0,1]; 0 returns the input unchanged. The random fields are a
// function of (sample_id, kind, seed) only, so raising severity moves every
// pixel further along the same path.
Tensor apply_corruption(const Tensor& x, const std::string& sample_id,
                        Corruption kind, double severity, uint64_t seed);

struct Rung {
  std::string name;  // "clean" or "<kind>@<severity>"
  std::string kind;  // empty for the clean rung
  double severity = 0.0;
  std::vector<Sample> samples;
};

// One rung per (kind, positive severity), ordered by kind then severity, with
// a single shared clean rung up front when 0 is among the severities.
// Severities must be strictly increasing and inside [0,1].
std::vector<Rung> build_ladder(const std::vector<Sample>& base,
                               const std::vector<Corruption>& kinds,
                               const std::vector<double>& severities,
                               uint64_t seed);

// Reads every regular file in the directory in filename order; unreadable
// files are skipped and reported in warnings. Labels are unknown (-1) and the
// source is the directory's basename.
std::vector<Sample> load_external(const std::string& dir, int image_size,
                                  std::vector<std::string>* warnings);

struct ManifestRow {
  std::string sample_id;
  std::string source;
  int label;
  std::string path;
};

void save_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> load_manifest(const std::string& path);

}  // namespace drue
