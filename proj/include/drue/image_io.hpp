#pragma once

#include <string>
#include <vector>

#include "drue/tensor.hpp"

namespace drue {

// Images are [3,H,W] doubles in [0,1], RGB order. PNG round-trips quantize
// to 8 bits.
void save_png(const std::string& path, const Tensor& image);
Tensor load_png(const std::string& path);
// imread + bilinear resize to size x size + scale to [0,1]. Throws IoError-ish
// ConfigError on unreadable files only when strict; otherwise returns empty.
Tensor load_image_resized(const std::string& path, int size);

}  // namespace drue
