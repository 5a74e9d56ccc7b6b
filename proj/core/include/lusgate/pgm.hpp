#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lusgate/tensor.hpp"

namespace lusgate {

// 8-bit grayscale image as stored on disk.
struct GrayImage {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> pix;  // row-major

    std::uint8_t& at(int y, int x) { return pix[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return pix[static_cast<std::size_t>(y) * w + x]; }
};

// Binary PGM (P5, maxval 255).
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

// Binary PPM (P6, maxval 255); rgb is row-major interleaved, 3 bytes per pixel.
void write_ppm(int h, int w, const std::vector<std::uint8_t>& rgb, const std::filesystem::path& path);

// [0,1] single-channel tensor <-> 8-bit image; values are clamped, then
// rounded to nearest so quantization is deterministic.
GrayImage tensor_to_image(const Tensor& t);
Tensor image_to_tensor(const GrayImage& img);

}  // namespace lusgate
