#include "san/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "san/rng.hpp"
#include "san/segmentation.hpp"

namespace fs = std::filesystem;

namespace san {

std::string domain_name(Domain d) {
    return d == Domain::FROZEN ? "FROZEN" : "PERMANENT";
}

Domain parse_domain(const std::string& s) {
    if (s == "FROZEN" || s == "frozen") return Domain::FROZEN;
    if (s == "PERMANENT" || s == "permanent") return Domain::PERMANENT;
    throw Error("unknown domain: " + s);
}

std::vector<ImagePatch> extract_patches(const RgbImage& image, const std::string& source_id,
                                        int patch_size, int stride) {
    check_patch_size(patch_size);
    if (stride < 1)
        throw Error("extract_patches: stride must be >= 1");
    if (image.h < patch_size || image.w < patch_size)
        throw Error("extract_patches: source too small (" + std::to_string(image.h) + "x" +
                    std::to_string(image.w) + " vs patch " + std::to_string(patch_size) + ")");

    const int rows = (image.h - patch_size) / stride + 1;
    const int cols = (image.w - patch_size) / stride + 1;
    std::vector<ImagePatch> out;
    out.reserve(size_t(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            ImagePatch p = make_patch(patch_size, source_id, i * stride, j * stride);
            for (int y = 0; y < patch_size; ++y)
                for (int x = 0; x < patch_size; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        p.at(y, x, ch) = image.at(i * stride + y, j * stride + x, ch);
            out.push_back(std::move(p));
        }
    }
    return out;
}

double blank_fraction(const ImagePatch& patch, int white_level) {
    if (white_level < 0 || white_level > 255)
        throw Error("blank_fraction: white_level must be in [0,255]");
    const int s = patch.size;
    int64_t blank = 0;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            uint8_t m = std::min({patch.at(y, x, 0), patch.at(y, x, 1), patch.at(y, x, 2)});
            if (int(m) >= white_level) ++blank;
        }
    return double(blank) / (double(s) * s);
}

std::vector<ImagePatch> filter_blank(std::vector<ImagePatch> patches, double rho,
                                     int white_level) {
    if (rho < 0.0 || rho > 1.0)
        throw Error("filter_blank: rho must be in [0,1]");
    std::vector<ImagePatch> kept;
    kept.reserve(patches.size());
    for (auto& p : patches)
        if (blank_fraction(p, white_level) < rho)
            kept.push_back(std::move(p));
    return kept;
}

namespace {

bool is_raster_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".png" || ext == ".bmp" || ext == ".ppm" || ext == ".tif" || ext == ".tiff";
}

NucleiMask cut_mask_region(const RgbImage& mask_tile, int row, int col, int size) {
    NucleiMask m;
    m.h = m.w = size;
    m.labels.assign(size_t(size) * size, 0);
    int k = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            // tile sidecars are loaded as RGB; any nonzero pixel is foreground
            uint8_t v = std::max({mask_tile.at(row + y, col + x, 0),
                                  mask_tile.at(row + y, col + x, 1),
                                  mask_tile.at(row + y, col + x, 2)});
            m.at(y, x) = v > 0 ? 1 : 0;
            k |= v > 0;
        }
    m.num_instances = k;
    return m;
}

} // namespace

PrepareResult prepare_dataset(const PrepareOptions& opts) {
    if (opts.tile_dirs.empty())
        throw Error("prepare_dataset: no input directories");
    for (const auto& d : opts.tile_dirs)
        if (!fs::is_directory(d))
            throw Error("prepare_dataset: input directory does not exist: " + d.string());

    fs::create_directories(opts.out_dir);

    // Deterministic file discovery: collect and sort by path.
    std::vector<fs::path> files;
    for (const auto& d : opts.tile_dirs)
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file() && is_raster_file(e.path()) &&
                e.path().stem().string().find(opts.mask_suffix) == std::string::npos)
                files.push_back(e.path());
    std::sort(files.begin(), files.end());

    PrepareResult res;
    res.manifest.domain = opts.domain;
    res.manifest.seed = opts.seed;
    res.manifest.patch_size = opts.patch_size;
    res.manifest.stride = opts.stride;
    res.manifest.blank_threshold = opts.blank_threshold;

    struct Kept {
        ImagePatch patch;
        NucleiMask mask;
        bool has_mask = false;
        double blank = 0.0;
    };
    std::vector<Kept> kept;

    for (const auto& file : files) {
        RgbImage tile;
        try {
            tile = load_rgb(file);
        } catch (const Error& e) {
            std::cerr << "warning: skipping unreadable file: " << file.string() << "\n";
            ++res.manifest.skipped_files;
            continue;
        }
        std::optional<RgbImage> mask_tile;
        if (opts.masks == MaskPolicy::Sidecar) {
            fs::path mp = file.parent_path() /
                          (file.stem().string() + opts.mask_suffix + file.extension().string());
            if (fs::exists(mp)) mask_tile = load_rgb(mp);
        }

        std::vector<ImagePatch> patches;
        try {
            patches = extract_patches(tile, file.stem().string(), opts.patch_size, opts.stride);
        } catch (const Error& e) {
            std::cerr << "warning: " << e.what() << " (" << file.string() << ")\n";
            ++res.manifest.skipped_files;
            continue;
        }
        for (auto& p : patches) {
            double bf = blank_fraction(p, opts.white_level);
            if (!(bf < opts.blank_threshold)) {
                ++res.rejected;
                continue;
            }
            Kept k;
            k.blank = bf;
            if (opts.masks == MaskPolicy::Builtin) {
                k.mask = segment_nuclei(p);
                k.has_mask = true;
            } else if (opts.masks == MaskPolicy::Sidecar && mask_tile) {
                k.mask = cut_mask_region(*mask_tile, p.row, p.col, p.size);
                k.has_mask = true;
            }
            k.patch = std::move(p);
            kept.push_back(std::move(k));
        }
    }

    if (kept.empty())
        throw Error("prepare_dataset: zero usable patches");

    // Canonical order before shuffling so the permutation depends only on
    // (entry set, seed), not on discovery order.
    std::sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
        return std::tie(a.patch.source_id, a.patch.row, a.patch.col) <
               std::tie(b.patch.source_id, b.patch.row, b.patch.col);
    });

    for (auto& k : kept) {
        std::ostringstream stem;
        stem << k.patch.source_id << "_r" << k.patch.row << "_c" << k.patch.col;
        fs::path ppath = opts.out_dir / (stem.str() + ".png");
        save_patch(k.patch, ppath);
        ManifestEntry e;
        e.patch_path = ppath.string();
        e.source_id = k.patch.source_id;
        e.row = k.patch.row;
        e.col = k.patch.col;
        e.blank_fraction = k.blank;
        if (k.has_mask) {
            fs::path mpath = opts.out_dir / (stem.str() + opts.mask_suffix + ".png");
            save_mask(k.mask, mpath);
            e.mask_path = mpath.string();
        }
        res.manifest.entries.push_back(std::move(e));
    }
    res.kept = int(res.manifest.entries.size());

    Rng rng(mix_seed(opts.seed, "manifest-shuffle"));
    rng.shuffle(res.manifest.entries);
    return res;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write manifest: " + path.string());
    out << "# san-manifest v1\n";
    out << "# domain=" << domain_name(m.domain) << " seed=" << m.seed
        << " patch_size=" << m.patch_size << " stride=" << m.stride;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", m.blank_threshold);
    out << " blank_threshold=" << buf << " skipped_files=" << m.skipped_files << "\n";
    for (const auto& e : m.entries) {
        std::snprintf(buf, sizeof buf, "%.9g", e.blank_fraction);
        out << e.patch_path << '\t' << (e.mask_path.empty() ? "-" : e.mask_path) << '\t'
            << e.source_id << '\t' << e.row << '\t' << e.col << '\t' << buf << '\n';
    }
    if (!out)
        throw Error("manifest write failed: " + path.string());
}

namespace {

std::string header_field(const std::string& line, const std::string& key) {
    auto pos = line.find(key + "=");
    if (pos == std::string::npos)
        throw Error("manifest header missing field: " + key);
    pos += key.size() + 1;
    auto end = line.find(' ', pos);
    return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

} // namespace

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read manifest: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "# san-manifest v1")
        throw Error("not a san manifest: " + path.string());
    if (!std::getline(in, line))
        throw Error("manifest header truncated: " + path.string());

    DatasetManifest m;
    m.domain = parse_domain(header_field(line, "domain"));
    m.seed = std::stoull(header_field(line, "seed"));
    m.patch_size = std::stoi(header_field(line, "patch_size"));
    m.stride = std::stoi(header_field(line, "stride"));
    m.blank_threshold = std::stod(header_field(line, "blank_threshold"));
    m.skipped_files = std::stoi(header_field(line, "skipped_files"));

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        ManifestEntry e;
        std::string mask, row, col, blank;
        if (!std::getline(is, e.patch_path, '\t') || !std::getline(is, mask, '\t') ||
            !std::getline(is, e.source_id, '\t') || !std::getline(is, row, '\t') ||
            !std::getline(is, col, '\t') || !std::getline(is, blank))
            throw Error("malformed manifest record: " + line);
        if (mask != "-") e.mask_path = mask;
        e.row = std::stoi(row);
        e.col = std::stoi(col);
        e.blank_fraction = std::stod(blank);
        m.entries.push_back(std::move(e));
    }
    return m;
}

} // namespace san
