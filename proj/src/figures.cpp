#include "drue/figures.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "drue/errors.hpp"

namespace drue {

namespace {

using nlohmann::json;

constexpr int kFontFace = cv::FONT_HERSHEY_SIMPLEX;

cv::Mat rgb_panel(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ContractViolation("figure: expected [3,H,W], got " +
                            image.shape_str());
  const int h = image.dim(1), w = image.dim(2);
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        px[2 - c] = static_cast<uchar>(std::lround(v * 255.0));
      }
    }
  return m;
}

cv::Mat gray_panel(const Tensor& map) {
  if (map.ndim() != 2)
    throw ContractViolation("figure: expected [H,W] map, got " +
                            map.shape_str());
  const int h = map.dim(0), w = map.dim(1);
  cv::Mat m(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = std::clamp(map[static_cast<size_t>(y) * w + x], 0.0, 1.0);
      m.at<uchar>(y, x) = static_cast<uchar>(std::lround(v * 255.0));
    }
  return m;
}

// White at 0.5, blue below, red above: centered on the chance level so the
// table reads at a glance.
cv::Vec3b auc_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto lerp = [](double a, double b, double t) {
    return static_cast<uchar>(std::lround(a + (b - a) * t));
  };
  if (v < 0.5) {
    const double t = v / 0.5;
    return {lerp(200, 255, t), lerp(120, 255, t), lerp(60, 255, t)};  // BGR
  }
  const double t = (v - 0.5) / 0.5;
  return {lerp(255, 60, t), lerp(255, 90, t), lerp(255, 200, t)};
}

void put_label(cv::Mat& img, const std::string& text, cv::Point at,
               double scale, cv::Scalar color = {30, 30, 30}) {
  cv::putText(img, text, at, kFontFace, scale, color, 1, cv::LINE_AA);
}

void write_png(const std::string& path, const cv::Mat& img) {
  if (!cv::imwrite(path, img)) throw ComputeError("failed to write " + path);
}

json parse_doc(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw ComputeError(std::string("figure: ") + what + " is not valid JSON");
  return j;
}

template <typename T>
void ordered_insert(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

void figure_heat_table(const std::string& report_json,
                       const std::string& out_png) {
  json j = parse_doc(report_json, "report");
  if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty())
    throw ComputeError("figure: report holds no cells");

  std::vector<std::string> methods, rungs;
  struct Cell {
    double mean, sd;
  };
  std::vector<std::pair<std::pair<std::string, std::string>, Cell>> cells;
  for (const auto& c : j["cells"]) {
    const std::string m = c.at("method").get<std::string>();
    const std::string d = c.at("dataset").get<std::string>();
    ordered_insert(methods, m);
    ordered_insert(rungs, d);
    cells.push_back({{m, d},
                     {c.at("auc").at("mean").get<double>(),
                      c.at("auc").at("std").get<double>()}});
  }

  const int cw = 150, ch = 46, left = 150, top = 64, bottom = 14, right = 14;
  const int W = left + cw * static_cast<int>(rungs.size()) + right;
  const int H = top + ch * static_cast<int>(methods.size()) + bottom;
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));

  put_label(img, "OOD detection AUC (mean +/- std over seeds)",
            {left, 24}, 0.5);
  for (size_t col = 0; col < rungs.size(); ++col) {
    // split long rung names at the severity marker
    const std::string& name = rungs[col];
    const auto at = name.find('@');
    const int x = left + static_cast<int>(col) * cw + 6;
    if (at == std::string::npos) {
      put_label(img, name, {x, top - 10}, 0.38);
    } else {
      put_label(img, name.substr(0, at), {x, top - 22}, 0.38);
      put_label(img, "sev " + name.substr(at + 1), {x, top - 6}, 0.38);
    }
  }
  for (size_t row = 0; row < methods.size(); ++row)
    put_label(img, methods[row],
              {8, top + static_cast<int>(row) * ch + ch / 2 + 5}, 0.42);

  for (const auto& [key, cell] : cells) {
    const auto rit = std::find(methods.begin(), methods.end(), key.first);
    const auto cit = std::find(rungs.begin(), rungs.end(), key.second);
    const int row = static_cast<int>(rit - methods.begin());
    const int col = static_cast<int>(cit - rungs.begin());
    const int x0 = left + col * cw, y0 = top + row * ch;
    cv::Vec3b bgr = auc_color(cell.mean);
    cv::rectangle(img, {x0, y0}, {x0 + cw - 2, y0 + ch - 2},
                  cv::Scalar(bgr[0], bgr[1], bgr[2]), cv::FILLED);
    char text[48];
    std::snprintf(text, sizeof text, "%.3f +/- %.3f", cell.mean, cell.sd);
    put_label(img, text, {x0 + 10, y0 + ch / 2 + 5}, 0.4);
  }
  write_png(out_png, img);
}

std::vector<std::string> figure_distributions(
    const std::string& histograms_json, const std::string& out_dir) {
  json j = parse_doc(histograms_json, "histograms");
  if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty())
    throw ComputeError("figure: histogram export holds no cells");
  const auto edges = j.at("bin_edges").get<std::vector<double>>();
  if (edges.size() < 2)
    throw ComputeError("figure: histogram export has no bin edges");
  const double lo = edges.front(), hi = edges.back();
  const double span = hi > lo ? hi - lo : 1.0;

  std::vector<std::string> methods;
  for (const auto& c : j["cells"])
    ordered_insert(methods, c.at("method").get<std::string>());

  const int plot_w = 420, row_h = 56, gap = 10, left = 170, right = 20,
            top = 46;
  std::vector<std::string> written;
  for (const std::string& method : methods) {
    std::vector<json> rows;
    for (const auto& c : j["cells"])
      if (c.at("method").get<std::string>() == method) rows.push_back(c);

    const int H = top + static_cast<int>(rows.size()) * (row_h + gap) + 14;
    const int W = left + plot_w + right;
    cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
    put_label(img, "score distribution: " + method, {left, 26}, 0.5);
    char range[64];
    std::snprintf(range, sizeof range, "score range [%.3g, %.3g]", lo, hi);
    put_label(img, range, {left, 42}, 0.36, {120, 120, 120});

    for (size_t r = 0; r < rows.size(); ++r) {
      const int y0 = top + static_cast<int>(r) * (row_h + gap);
      const int base = y0 + row_h;
      const auto counts = rows[r].at("counts").get<std::vector<long long>>();
      long long peak = 1;
      for (long long c : counts) peak = std::max(peak, c);
      cv::line(img, {left, base}, {left + plot_w, base},
               cv::Scalar(150, 150, 150), 1);
      const double bw = static_cast<double>(plot_w) / counts.size();
      for (size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] <= 0) continue;
        const int bh = std::max(
            2, static_cast<int>(std::lround(static_cast<double>(counts[b]) /
                                            peak * (row_h - 6))));
        const int x0 = left + static_cast<int>(std::floor(b * bw));
        const int x1 = left + static_cast<int>(std::floor((b + 1) * bw)) - 1;
        cv::rectangle(img, {x0, base - bh}, {std::max(x0, x1), base},
                      cv::Scalar(180, 130, 70), cv::FILLED);
      }
      const double med = rows[r].at("median").get<double>();
      const int mx =
          left + static_cast<int>(std::lround((med - lo) / span * plot_w));
      cv::line(img, {mx, y0 + 4}, {mx, base}, cv::Scalar(40, 40, 200), 2);
      put_label(img, rows[r].at("dataset").get<std::string>(),
                {8, y0 + row_h / 2 + 4}, 0.38);
    }
    const std::string path = out_dir + "/distributions_" + method + ".png";
    write_png(path, img);
    written.push_back(path);
  }
  return written;
}

void figure_panel_strip(const Tensor& input, const Tensor& recon_shallow,
                        const Tensor& recon_deep, const Tensor& map_norm,
                        const std::string& out_png) {
  cv::Mat panels[4];
  panels[0] = rgb_panel(input);
  panels[1] = rgb_panel(recon_shallow);
  panels[2] = rgb_panel(recon_deep);
  cv::applyColorMap(gray_panel(map_norm), panels[3], cv::COLORMAP_INFERNO);

  const int side = panels[0].rows;
  const int scale = std::max(1, 192 / side);
  const int S = side * scale, gap = 8, caption = 22;
  const char* names[4] = {"input", "shallow decode", "deep decode",
                          "discrepancy map"};

  cv::Mat img(S + caption + gap, 4 * S + 5 * gap, CV_8UC3,
              cv::Scalar(255, 255, 255));
  for (int p = 0; p < 4; ++p) {
    if (panels[p].rows != side || panels[p].cols != side)
      throw ContractViolation("figure: panel sizes differ");
    cv::Mat big;
    cv::resize(panels[p], big, {S, S}, 0, 0, cv::INTER_NEAREST);
    big.copyTo(img(cv::Rect(gap + p * (S + gap), 0, S, S)));
    put_label(img, names[p], {gap + p * (S + gap), S + 16}, 0.38);
  }
  write_png(out_png, img);
}

void export_map(const Tensor& map_raw, const Tensor& map_norm,
                const std::string& png_path, const std::string& csv_path) {
  if (!map_raw.same_shape(map_norm) || map_raw.ndim() != 2)
    throw ContractViolation("export_map: raw and normalized shapes differ");
  write_png(png_path, gray_panel(map_norm));

  std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ComputeError("cannot write " + csv_path);
  const int h = map_raw.dim(0), w = map_raw.dim(1);
  char num[40];
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::snprintf(num, sizeof num, "%.17g",
                    map_raw[static_cast<size_t>(y) * w + x]);
      out << num;
      if (x + 1 < w) out << ',';
    }
    out << '\n';
  }
  if (!out) throw ComputeError("failed while writing " + csv_path);
}

}  // namespace drue
