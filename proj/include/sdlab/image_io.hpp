#pragma once

#include <string>

#include "sdlab/tensor.hpp"

namespace sdlab {

// PNG-backed image plumbing. Images travel as 1x3xHxW tensors in [0,1]
// (RGB channel order); masks as 1x1xHxW.

Tensor read_image_rgb(const std::string& path);       // -> 1x3xHxW in [0,1]
Tensor read_mask_gray(const std::string& path);       // -> 1x1xHxW in [0,1], unthresholded

void write_image_rgb(const std::string& path, const Tensor& image);   // clamps to [0,1]
void write_mask_png(const std::string& path, const Tensor& mask);     // 0 -> 0, else 255

Tensor resize_image_bilinear(const Tensor& image, int out_h, int out_w);
Tensor resize_mask_nearest(const Tensor& mask, int out_h, int out_w);

}  // namespace sdlab
