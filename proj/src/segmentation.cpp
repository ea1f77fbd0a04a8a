#include "san/segmentation.hpp"

#include <algorithm>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace san {

size_t NucleiMask::foreground_count() const {
    return size_t(std::count_if(labels.begin(), labels.end(),
                                [](uint16_t v) { return v > 0; }));
}

namespace {

// Otsu threshold over an 8-bit histogram. Returns the level T maximizing
// between-class variance; foreground is value > T. A constant image yields
// T = that value, i.e. an empty foreground.
int otsu_threshold(const std::array<int64_t, 256>& hist, int64_t total) {
    double sum = 0.0;
    for (int i = 0; i < 256; ++i) sum += double(i) * double(hist[i]);
    double sum_b = 0.0;
    int64_t w_b = 0;
    double best = -1.0;
    int thresh = 0;
    for (int t = 0; t < 256; ++t) {
        w_b += hist[t];
        if (w_b == 0) continue;
        int64_t w_f = total - w_b;
        if (w_f == 0) break;
        sum_b += double(t) * double(hist[t]);
        double m_b = sum_b / double(w_b);
        double m_f = (sum - sum_b) / double(w_f);
        double var = double(w_b) * double(w_f) * (m_b - m_f) * (m_b - m_f);
        if (var > best) {
            best = var;
            thresh = t;
        }
    }
    return thresh;
}

// Relabels components as {1..K} in row-major order of first appearance so the
// result does not depend on the labelling library's internal numbering.
void canonical_relabel(NucleiMask& m) {
    std::vector<uint16_t> remap(size_t(m.num_instances) + 1, 0);
    uint16_t next = 0;
    for (auto& v : m.labels) {
        if (v == 0) continue;
        if (remap[v] == 0) remap[v] = ++next;
        v = remap[v];
    }
    m.num_instances = next;
}

} // namespace

NucleiMask segment_nuclei(const ImagePatch& patch, const SegmenterParams& params) {
    const int s = patch.size;

    // Stain-density proxy: dark, saturated stain -> high value.
    cv::Mat proxy(s, s, CV_8UC1);
    std::array<int64_t, 256> hist{};
    for (int y = 0; y < s; ++y) {
        uint8_t* row = proxy.ptr<uint8_t>(y);
        for (int x = 0; x < s; ++x) {
            uint8_t m = std::min({patch.at(y, x, 0), patch.at(y, x, 1), patch.at(y, x, 2)});
            row[x] = uint8_t(255 - m);
            ++hist[row[x]];
        }
    }

    const int t = otsu_threshold(hist, int64_t(s) * s);
    cv::Mat binary;
    cv::threshold(proxy, binary, t, 255, cv::THRESH_BINARY);

    if (params.opening_kernel > 1) {
        cv::Mat kernel = cv::getStructuringElement(
            cv::MORPH_RECT, cv::Size(params.opening_kernel, params.opening_kernel));
        cv::morphologyEx(binary, binary, cv::MORPH_OPEN, kernel);
    }

    cv::Mat labels, stats, centroids;
    int n = cv::connectedComponentsWithStats(binary, labels, stats, centroids, 8, CV_32S);

    NucleiMask mask;
    mask.h = mask.w = s;
    mask.labels.assign(size_t(s) * s, 0);
    mask.num_instances = n - 1;
    for (int y = 0; y < s; ++y) {
        const int32_t* row = labels.ptr<int32_t>(y);
        for (int x = 0; x < s; ++x) {
            int lbl = row[x];
            if (lbl > 0 && stats.at<int32_t>(lbl, cv::CC_STAT_AREA) >= params.min_component_px)
                mask.at(y, x) = uint16_t(lbl);
        }
    }
    canonical_relabel(mask);
    return mask;
}

SegmentedPatch apply_mask(const ImagePatch& patch, const NucleiMask& mask,
                          std::array<uint8_t, 3> fill) {
    if (mask.h != patch.size || mask.w != patch.size)
        throw Error("apply_mask: mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                    " does not match patch size " + std::to_string(patch.size));
    SegmentedPatch out;
    out.pixels = patch;
    out.source_patch_id = patch.source_id;
    out.fill = fill;
    for (int y = 0; y < patch.size; ++y)
        for (int x = 0; x < patch.size; ++x)
            if (!mask.foreground(y, x))
                for (int ch = 0; ch < 3; ++ch)
                    out.pixels.at(y, x, ch) = fill[ch];
    return out;
}

void save_mask(const NucleiMask& mask, const std::filesystem::path& path) {
    cv::Mat m(mask.h, mask.w, CV_16UC1);
    for (int y = 0; y < mask.h; ++y) {
        uint16_t* row = m.ptr<uint16_t>(y);
        for (int x = 0; x < mask.w; ++x) row[x] = mask.at(y, x);
    }
    if (!cv::imwrite(path.string(), m))
        throw Error("cannot write mask: " + path.string());
}

NucleiMask load_mask(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty())
        throw Error("cannot read mask: " + path.string());
    if (m.channels() != 1)
        throw Error("mask raster must be single-channel: " + path.string());
    NucleiMask mask;
    mask.h = m.rows;
    mask.w = m.cols;
    mask.labels.assign(size_t(mask.h) * mask.w, 0);
    uint16_t maxl = 0;
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            uint16_t v = m.depth() == CV_16U ? m.at<uint16_t>(y, x) : uint16_t(m.at<uint8_t>(y, x));
            mask.at(y, x) = v;
            maxl = std::max(maxl, v);
        }
    mask.num_instances = maxl;
    return mask;
}

SidecarMasks load_sidecar_masks(const DatasetManifest& manifest) {
    SidecarMasks out;
    for (const auto& e : manifest.entries) {
        if (e.mask_path.empty()) continue;
        if (!std::filesystem::exists(e.mask_path)) {
            out.missing.push_back(e.patch_path);
            continue;
        }
        NucleiMask m = load_mask(e.mask_path); // unreadable -> hard error
        if (m.h != manifest.patch_size || m.w != manifest.patch_size)
            throw Error("sidecar mask size mismatch for entry " + e.patch_path + ": mask is " +
                        std::to_string(m.h) + "x" + std::to_string(m.w) + ", patch size is " +
                        std::to_string(manifest.patch_size));
        out.by_patch.emplace(e.patch_path, std::move(m));
    }
    return out;
}

Tensor mask_to_tensor(const NucleiMask& mask) {
    Tensor t(1, 1, mask.h, mask.w);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            t.at(0, 0, y, x) = mask.foreground(y, x) ? 1.0f : 0.0f;
    return t;
}

double mask_iou(const NucleiMask& a, const NucleiMask& b) {
    if (a.h != b.h || a.w != b.w)
        throw Error("mask_iou: size mismatch");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.labels.size(); ++i) {
        bool fa = a.labels[i] > 0, fb = b.labels[i] > 0;
        inter += fa && fb;
        uni += fa || fb;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

} // namespace san
