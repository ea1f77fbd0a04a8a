#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "san/image.hpp"

namespace san {

enum class Domain { FROZEN, PERMANENT };

std::string domain_name(Domain d);
Domain parse_domain(const std::string& s);

// Pixels with min(R,G,B) >= white_level count as blank.
inline constexpr int kDefaultWhiteLevel = 220;
inline constexpr double kDefaultBlankThreshold = 0.5;

struct ManifestEntry {
    std::string patch_path;
    std::string mask_path; // empty when no mask is attached
    std::string source_id;
    int row = 0, col = 0;
    double blank_fraction = 0.0;
};

struct DatasetManifest {
    Domain domain = Domain::FROZEN;
    uint64_t seed = 0;
    int patch_size = 256;
    int stride = 256;
    double blank_threshold = kDefaultBlankThreshold;
    int skipped_files = 0;
    std::vector<ManifestEntry> entries;
};

// Cuts an image into size x size patches at offsets (i*stride, j*stride),
// row-major, dropping remainder strips at the edges.
std::vector<ImagePatch> extract_patches(const RgbImage& image, const std::string& source_id,
                                        int patch_size, int stride);

// Fraction of pixels whose min channel is >= white_level.
double blank_fraction(const ImagePatch& patch, int white_level = kDefaultWhiteLevel);

// Keeps patches with blank_fraction < rho (strict), order preserved.
std::vector<ImagePatch> filter_blank(std::vector<ImagePatch> patches, double rho,
                                     int white_level = kDefaultWhiteLevel);

enum class MaskPolicy {
    None,    // manifest entries carry no mask paths
    Builtin, // segment each kept patch with the built-in segmenter, cache to disk
    Sidecar, // cut masks from tile-level sidecar rasters (tile stem + suffix)
};

struct PrepareOptions {
    std::vector<std::filesystem::path> tile_dirs;
    std::filesystem::path out_dir; // patch/mask rasters land here
    Domain domain = Domain::FROZEN;
    uint64_t seed = 0;
    int patch_size = 256;
    int stride = 256;
    double blank_threshold = kDefaultBlankThreshold;
    int white_level = kDefaultWhiteLevel;
    MaskPolicy masks = MaskPolicy::Builtin;
    std::string mask_suffix = "_mask";
};

struct PrepareResult {
    DatasetManifest manifest;
    int kept = 0;
    int rejected = 0;
};

// Full preparation pipeline: decode tiles, extract + filter patches, write
// patch (and mask) rasters under out_dir, and build the shuffled manifest.
// Deterministic in (file set, options): entries are ordered by
// (source_id, row, col) and then permuted by the seeded shuffle.
PrepareResult prepare_dataset(const PrepareOptions& opts);

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

} // namespace san
