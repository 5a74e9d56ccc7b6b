#pragma once

#include <cstdint>
#include <vector>

#include "lusgate/network.hpp"

namespace lusgate {

struct SaliencyMap {
    Tensor heatmap;  // input-sized, nonnegative, max-normalized to 1 unless all zero
    int target_class = 0;
    int target_layer = 0;
};

// Index of the last convolutional layer, the default Grad-CAM target.
int last_conv_layer(const nn::NetworkSpec& spec);

// Channel weights are the spatial means of d(class logit)/d(feature map) at
// target_layer; the rectified weighted feature-map sum is bilinearly
// upsampled to the input size and max-normalized.
SaliencyMap grad_cam(const nn::ModelParams& params, const Tensor& frame, int target_class,
                     int target_layer);

// Input gradient of the class logit under the guided-relu backward rule.
Tensor guided_backprop(const nn::ModelParams& params, const Tensor& frame, int target_class);

// Elementwise |guided_backprop| * grad_cam, max-normalized.
SaliencyMap guided_grad_cam(const nn::ModelParams& params, const Tensor& frame, int target_class,
                            int target_layer);

Tensor bilinear_upsample(const Tensor& map, int out_h, int out_w);

// Heatmap over the grayscale frame, red (high) to blue (low); row-major RGB.
std::vector<std::uint8_t> colorize_overlay(const Tensor& frame, const Tensor& heatmap);

}  // namespace lusgate
