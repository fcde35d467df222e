#include "drue/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "drue/errors.hpp"
#include "drue/image_io.hpp"
#include "drue/rng.hpp"

namespace fs = std::filesystem;

namespace drue {

int label_for_ratio(double cup_to_disc) { return cup_to_disc > 0.6 ? 1 : 0; }

namespace {

double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// 1 well inside radius r, 0 outside, ~2px soft edge.
double disk_alpha(double d, double r) {
  const double t = clip01((r - d) / 2.0 + 0.5);
  return t * t * (3.0 - 2.0 * t);
}

struct Vec2 {
  double y, x;
};

void draw_vessel(std::vector<double>& cov, int size, Vec2 a, Vec2 c, Vec2 b,
                 double width) {
  const int steps = 3 * size;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double u = 1.0 - t;
    const double py = u * u * a.y + 2 * u * t * c.y + t * t * b.y;
    const double px = u * u * a.x + 2 * u * t * c.x + t * t * b.x;
    const int r = static_cast<int>(std::ceil(width)) + 1;
    const int y0 = std::max(0, static_cast<int>(py) - r);
    const int y1 = std::min(size - 1, static_cast<int>(py) + r);
    const int x0 = std::max(0, static_cast<int>(px) - r);
    const int x1 = std::min(size - 1, static_cast<int>(px) + r);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(y - py, x - px);
        const double v = clip01(1.0 - d / width);
        auto& slot = cov[static_cast<size_t>(y) * size + x];
        slot = std::max(slot, v);
      }
  }
}

Sample make_sample(int idx, int label, int size, uint64_t seed) {
  Rng rng(mix_seed(seed, "synth:" + std::to_string(idx)));
  Tensor img({3, size, size});

  // Reddish textured ground: coarse bilinear noise plus fine grain.
  const double base[3] = {0.52 + rng.uniform(-0.06, 0.06),
                          0.28 + rng.uniform(-0.05, 0.05),
                          0.16 + rng.uniform(-0.04, 0.04)};
  const int grid = 9;
  std::vector<double> coarse(3 * grid * grid);
  for (auto& v : coarse) v = rng.uniform(-0.05, 0.05);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double gy = static_cast<double>(y) / (size - 1) * (grid - 1);
        const double gx = static_cast<double>(x) / (size - 1) * (grid - 1);
        const int iy = std::min(grid - 2, static_cast<int>(gy));
        const int ix = std::min(grid - 2, static_cast<int>(gx));
        const double fy = gy - iy, fx = gx - ix;
        const double* g = coarse.data() + static_cast<size_t>(c) * grid * grid;
        const double v00 = g[iy * grid + ix], v01 = g[iy * grid + ix + 1];
        const double v10 = g[(iy + 1) * grid + ix], v11 = g[(iy + 1) * grid + ix + 1];
        const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                         fy * ((1 - fx) * v10 + fx * v11);
        img.at(c, y, x) = base[c] + v;
      }
  for (size_t i = 0; i < img.size(); ++i) img[i] += rng.normal(0.0, 0.015);

  // Dark vessel-like curves.
  const int n_vessels = 3 + rng.uniform_int(0, 2);
  std::vector<double> cov(static_cast<size_t>(size) * size, 0.0);
  for (int v = 0; v < n_vessels; ++v) {
    const double s = size - 1;
    Vec2 a, b;
    if (rng.bernoulli(0.5)) {
      a = {rng.uniform(0, s), 0.0};
      b = {rng.uniform(0, s), s};
    } else {
      a = {0.0, rng.uniform(0, s)};
      b = {s, rng.uniform(0, s)};
    }
    Vec2 c = {rng.uniform(0.2 * s, 0.8 * s), rng.uniform(0.2 * s, 0.8 * s)};
    const double width = 0.8 + rng.uniform(0.0, 0.8);
    draw_vessel(cov, size, a, c, b, width);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double f = 1.0 - 0.5 * cov[static_cast<size_t>(y) * size + x];
      for (int c = 0; c < 3; ++c) img.at(c, y, x) *= f;
    }

  // Bright disc with a brighter concentric cup; the cup/disc ratio carries
  // the class.
  const double cy = size / 2.0 + rng.uniform(-0.05, 0.05) * size;
  const double cx = size / 2.0 + rng.uniform(-0.05, 0.05) * size;
  const double rd = (0.18 + rng.uniform(0.0, 0.12)) * size;
  const double ratio =
      label == 1 ? 0.68 + rng.uniform(0.0, 0.22) : 0.30 + rng.uniform(0.0, 0.22);
  const double rc = ratio * rd;
  const double disc_col[3] = {0.93 + rng.uniform(-0.03, 0.03),
                              0.78 + rng.uniform(-0.04, 0.04),
                              0.50 + rng.uniform(-0.05, 0.05)};
  const double cup_col[3] = {0.99, 0.93 + rng.uniform(-0.02, 0.02),
                             0.72 + rng.uniform(-0.04, 0.04)};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      const double ad = disk_alpha(d, rd);
      const double ac = disk_alpha(d, rc);
      for (int c = 0; c < 3; ++c) {
        double v = img.at(c, y, x);
        v = (1 - ad) * v + ad * disc_col[c];
        v = (1 - ac) * v + ac * cup_col[c];
        img.at(c, y, x) = v;
      }
    }

  for (size_t i = 0; i < img.size(); ++i) img[i] = clip01(img[i]);

  char id[32];
  std::snprintf(id, sizeof id, "synth_%04d", idx);
  if (label != label_for_ratio(ratio))
    throw ComputeError("synthetic ratio landed on the wrong side of the rule");
  return Sample{id, std::move(img), label, "synthetic"};
}

}  // namespace

SplitSet generate_synthetic(int n_per_class, int image_size, uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("dataset.n_per_class must be >= 1");
  if (image_size < 16) throw ConfigError("dataset.image_size must be >= 16");

  SplitSet out;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<Sample> all;
    all.reserve(n_per_class);
    for (int i = 0; i < n_per_class; ++i)
      all.push_back(
          make_sample(cls * n_per_class + i, cls, image_size, seed));

    std::vector<int> order(all.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(mix_seed(seed, "split:c" + std::to_string(cls)));
    rng.shuffle(order);

    const int n_train = n_per_class * 8 / 10;
    const int n_val = n_per_class / 10;
    for (size_t i = 0; i < order.size(); ++i) {
      Sample& s = all[static_cast<size_t>(order[i])];
      if (static_cast<int>(i) < n_train)
        out.train.push_back(std::move(s));
      else if (static_cast<int>(i) < n_train + n_val)
        out.val.push_back(std::move(s));
      else
        out.test.push_back(std::move(s));
    }
  }
  return out;
}

Corruption corruption_from_string(const std::string& name) {
  if (name == "gaussian_noise") return Corruption::gaussian_noise;
  if (name == "blur") return Corruption::blur;
  if (name == "hue_shift") return Corruption::hue_shift;
  if (name == "contrast") return Corruption::contrast;
  if (name == "uniform_noise_replace") return Corruption::uniform_noise_replace;
  throw ConfigError("unknown corruption kind: " + name);
}

std::string to_string(Corruption kind) {
  switch (kind) {
    case Corruption::gaussian_noise: return "gaussian_noise";
    case Corruption::blur: return "blur";
    case Corruption::hue_shift: return "hue_shift";
    case Corruption::contrast: return "contrast";
    case Corruption::uniform_noise_replace: return "uniform_noise_replace";
  }
  throw ContractViolation("bad corruption enum");
}

namespace {

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

Tensor gaussian_blur(const Tensor& x, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] =
        std::exp(-0.5 * (i / sigma) * (i / sigma));
    sum += kernel[static_cast<size_t>(i + radius)];
  }
  for (auto& k : kernel) k /= sum;

  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor tmp(x.shape()), out(x.shape());
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<size_t>(i + radius)] *
                 x.at(ch, y, reflect_index(xx + i, w));
        tmp.at(ch, y, xx) = acc;
      }
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<size_t>(i + radius)] *
                 tmp.at(ch, reflect_index(y + i, h), xx);
        out.at(ch, y, xx) = acc;
      }
  return out;
}

}  // namespace

Tensor apply_corruption(const Tensor& x, const std::string& sample_id,
                        Corruption kind, double severity, uint64_t seed) {
  if (severity < 0.0 || severity > 1.0)
    throw ContractViolation("severity must be in [0,1]");
  if (x.ndim() != 3 || x.dim(0) != 3)
    throw ContractViolation("apply_corruption: expected [3,H,W]");
  if (severity == 0.0) return x;

  Rng rng(mix_seed(mix_seed(seed, to_string(kind)), sample_id));
  Tensor y(x.shape());

  switch (kind) {
    case Corruption::gaussian_noise: {
      const double sigma_max = 0.25;
      for (size_t i = 0; i < x.size(); ++i)
        y[i] = clip01(x[i] + severity * sigma_max * rng.normal(0.0, 1.0));
      return y;
    }
    case Corruption::blur:
      return gaussian_blur(x, severity * 3.0);
    case Corruption::hue_shift: {
      const double theta = severity * 2.0 * M_PI / 3.0;
      const double ct = std::cos(theta), st = std::sin(theta);
      const double k = (1.0 - ct) / 3.0, s3 = st / std::sqrt(3.0);
      // Rotation about the gray axis (1,1,1)/sqrt(3).
      const double R[3][3] = {{ct + k, k - s3, k + s3},
                              {k + s3, ct + k, k - s3},
                              {k - s3, k + s3, ct + k}};
      const int h = x.dim(1), w = x.dim(2);
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          const double v[3] = {x.at(0, yy, xx), x.at(1, yy, xx), x.at(2, yy, xx)};
          for (int c = 0; c < 3; ++c)
            y.at(c, yy, xx) =
                clip01(R[c][0] * v[0] + R[c][1] * v[1] + R[c][2] * v[2]);
        }
      return y;
    }
    case Corruption::contrast: {
      for (size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] + severity * (0.5 - x[i]);
      return y;
    }
    case Corruption::uniform_noise_replace: {
      for (size_t i = 0; i < x.size(); ++i) {
        const double u = rng.uniform(0.0, 1.0);
        y[i] = (1.0 - severity) * x[i] + severity * u;
      }
      return y;
    }
  }
  throw ContractViolation("bad corruption enum");
}

std::vector<Rung> build_ladder(const std::vector<Sample>& base,
                               const std::vector<Corruption>& kinds,
                               const std::vector<double>& severities,
                               uint64_t seed) {
  if (severities.empty()) throw ConfigError("ladder severities must not be empty");
  for (size_t i = 0; i < severities.size(); ++i) {
    if (severities[i] < 0.0 || severities[i] > 1.0)
      throw ConfigError("ladder severities must lie in [0,1]");
    if (i > 0 && severities[i] <= severities[i - 1])
      throw ConfigError("ladder severities must be strictly increasing");
  }
  for (size_t i = 0; i < kinds.size(); ++i)
    for (size_t j = i + 1; j < kinds.size(); ++j)
      if (kinds[i] == kinds[j])
        throw ConfigError("duplicate corruption kind in ladder");

  std::vector<Rung> ladder;
  if (severities[0] == 0.0) {
    Rung clean{"clean", "", 0.0, base};
    ladder.push_back(std::move(clean));
  }
  for (Corruption kind : kinds)
    for (double s : severities) {
      if (s == 0.0) continue;
      char name[64];
      std::snprintf(name, sizeof name, "%s@%.2f", to_string(kind).c_str(), s);
      Rung rung{name, to_string(kind), s, {}};
      rung.samples.reserve(base.size());
      for (const Sample& b : base) {
        Sample out{b.id, apply_corruption(b.image, b.id, kind, s, seed), b.label,
                   b.source};
        rung.samples.push_back(std::move(out));
      }
      ladder.push_back(std::move(rung));
    }
  return ladder;
}

std::vector<Sample> load_external(const std::string& dir, int image_size,
                                  std::vector<std::string>* warnings) {
  const fs::path root(dir);
  if (!fs::is_directory(root))
    throw ConfigError("external dataset path is not a directory: " + dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  if (files.empty())
    throw ConfigError("external dataset directory is empty: " + dir);

  const std::string source = root.filename().string();
  std::vector<Sample> out;
  for (const auto& f : files) {
    Tensor img = load_image_resized(f.string(), image_size);
    if (img.empty()) {
      if (warnings)
        warnings->push_back("skipped unreadable file: " + f.string());
      continue;
    }
    out.push_back(
        Sample{source + "_" + f.stem().string(), std::move(img), -1, source});
  }
  if (out.empty())
    throw ConfigError("no readable images in external dataset: " + dir);
  return out;
}

namespace {

void check_field(const std::string& f) {
  if (f.find(',') != std::string::npos || f.find('\n') != std::string::npos)
    throw ContractViolation("manifest field contains a separator: " + f);
}

}  // namespace

void save_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write " + path);
  out << "sample_id,source,label,path\n";
  for (const auto& r : rows) {
    check_field(r.sample_id);
    check_field(r.source);
    check_field(r.path);
    out << r.sample_id << ',' << r.source << ',' << r.label << ',' << r.path
        << '\n';
  }
}

std::vector<ManifestRow> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing manifest " + path +
                                 " (run `drue prepare` first)");
  std::string line;
  if (!std::getline(in, line) || line != "sample_id,source,label,path")
    throw ComputeError("bad manifest header in " + path);
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t p1 = line.find(',');
    const size_t p2 = line.find(',', p1 + 1);
    const size_t p3 = line.find(',', p2 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos ||
        p3 == std::string::npos)
      throw ComputeError("bad manifest row in " + path + ": " + line);
    ManifestRow r;
    r.sample_id = line.substr(0, p1);
    r.source = line.substr(p1 + 1, p2 - p1 - 1);
    r.label = std::stoi(line.substr(p2 + 1, p3 - p2 - 1));
    r.path = line.substr(p3 + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace drue
