#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "san/tensor.hpp"

namespace san {

// Arbitrary-size 8-bit RGB raster (tile inputs, full images).
struct RgbImage {
    int h = 0, w = 0;
    std::vector<uint8_t> rgb; // HWC, channel order R,G,B

    uint8_t at(int y, int x, int ch) const { return rgb[(size_t(y) * w + x) * 3 + ch]; }
    uint8_t& at(int y, int x, int ch) { return rgb[(size_t(y) * w + x) * 3 + ch]; }
};

// Square RGB patch, the unit of training and evaluation.
struct ImagePatch {
    int size = 0;             // H == W
    std::vector<uint8_t> rgb; // HWC
    std::string source_id;
    int row = 0, col = 0;     // pixel offset of this patch in its source image

    uint8_t at(int y, int x, int ch) const { return rgb[(size_t(y) * size + x) * 3 + ch]; }
    uint8_t& at(int y, int x, int ch) { return rgb[(size_t(y) * size + x) * 3 + ch]; }
};

ImagePatch make_patch(int size, std::string source_id = "", int row = 0, int col = 0);

// Validates patch invariants (square, even, >= 16 px).
void check_patch_size(int size);

RgbImage load_rgb(const std::filesystem::path& path);
void save_rgb(const RgbImage& img, const std::filesystem::path& path);
ImagePatch load_patch(const std::filesystem::path& path);
void save_patch(const ImagePatch& patch, const std::filesystem::path& path);

// v -> v/127.5 - 1, mapping {0..255} onto [-1, 1]. Output is 1x3xSxS (CHW).
Tensor normalize(const ImagePatch& patch);

// Inverse map round(127.5*(x+1)) clamped to [0,255]. `sample` selects the
// batch element of a stacked tensor.
ImagePatch denormalize(const Tensor& t, int sample = 0);

// Stacks patches into an Nx3xSxS batch; all patches must share one size.
Tensor stack_normalized(const std::vector<ImagePatch>& patches);

} // namespace san
