#include "drue/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "drue/errors.hpp"

namespace drue {

namespace {

cv::Mat to_mat8(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ContractViolation("save_png: expected [3,H,W], got " +
                            image.shape_str());
  const int h = image.dim(1), w = image.dim(2);
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        double v = image.at(c, y, x);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        px[2 - c] = static_cast<uchar>(std::lround(v * 255.0));  // RGB -> BGR
      }
    }
  return m;
}

Tensor from_mat8(const cv::Mat& m) {
  Tensor image({3, m.rows, m.cols});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c)
        image.at(c, y, x) = static_cast<double>(px[2 - c]) / 255.0;
    }
  return image;
}

}  // namespace

void save_png(const std::string& path, const Tensor& image) {
  if (!cv::imwrite(path, to_mat8(image)))
    throw ComputeError("failed to write " + path);
}

Tensor load_png(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw DependencyError("cannot read image " + path);
  return from_mat8(m);
}

Tensor load_image_resized(const std::string& path, int size) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) return Tensor();
  if (m.rows != size || m.cols != size) {
    cv::Mat resized;
    cv::resize(m, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
    m = resized;
  }
  return from_mat8(m);
}

}  // namespace drue
