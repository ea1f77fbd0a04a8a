#pragma once

#include <array>
#include <map>

#include "san/data.hpp"
#include "san/image.hpp"

namespace san {

// Per-pixel nucleus instance map: 0 = background, k > 0 = instance k.
// The label set {0..K} is contiguous; instances are numbered in row-major
// order of their first pixel.
struct NucleiMask {
    int h = 0, w = 0;
    std::vector<uint16_t> labels;
    int num_instances = 0;

    uint16_t at(int y, int x) const { return labels[size_t(y) * w + x]; }
    uint16_t& at(int y, int x) { return labels[size_t(y) * w + x]; }
    bool foreground(int y, int x) const { return at(y, x) > 0; }
    size_t foreground_count() const;
};

struct SegmenterParams {
    int min_component_px = 20; // components smaller than this are dropped
    int opening_kernel = 3;    // square structuring element side
};

// Built-in nuclei segmenter: stain-density proxy (255 - min channel), Otsu
// threshold, 3x3 morphological opening, connected components, small-component
// removal. Deterministic for fixed parameters.
NucleiMask segment_nuclei(const ImagePatch& patch, const SegmenterParams& params = {});

struct SegmentedPatch {
    ImagePatch pixels;
    std::string source_patch_id;
    std::string mask_id;
    std::array<uint8_t, 3> fill{255, 255, 255};
};

// Foreground pixels copied bit-exactly from the patch, background set to fill.
SegmentedPatch apply_mask(const ImagePatch& patch, const NucleiMask& mask,
                          std::array<uint8_t, 3> fill = {255, 255, 255});

// Sidecar mask rasters: single-channel 16-bit PNG, same size as the patch.
void save_mask(const NucleiMask& mask, const std::filesystem::path& path);
NucleiMask load_mask(const std::filesystem::path& path);

struct SidecarMasks {
    std::map<std::string, NucleiMask> by_patch; // keyed by patch path
    std::vector<std::string> missing;           // mask path recorded but file absent
};

// Loads every mask referenced by the manifest. A recorded-but-absent mask file
// flags the entry; unreadable files and size mismatches are hard errors.
SidecarMasks load_sidecar_masks(const DatasetManifest& manifest);

// Binary mask view as a 1x1xHxW tensor of {0,1} floats.
Tensor mask_to_tensor(const NucleiMask& mask);

double mask_iou(const NucleiMask& a, const NucleiMask& b);

} // namespace san
