#include "san/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace san {

ImagePatch make_patch(int size, std::string source_id, int row, int col) {
    check_patch_size(size);
    ImagePatch p;
    p.size = size;
    p.rgb.assign(size_t(size) * size * 3, 0);
    p.source_id = std::move(source_id);
    p.row = row;
    p.col = col;
    return p;
}

void check_patch_size(int size) {
    if (size < 16 || size % 2 != 0)
        throw Error("patch size must be even and >= 16, got " + std::to_string(size));
}

RgbImage load_rgb(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty())
        throw Error("cannot read image: " + path.string());
    RgbImage img;
    img.h = bgr.rows;
    img.w = bgr.cols;
    img.rgb.resize(size_t(img.h) * img.w * 3);
    for (int y = 0; y < img.h; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.w; ++x) {
            img.at(y, x, 0) = row[x][2];
            img.at(y, x, 1) = row[x][1];
            img.at(y, x, 2) = row[x][0];
        }
    }
    return img;
}

void save_rgb(const RgbImage& img, const std::filesystem::path& path) {
    cv::Mat bgr(img.h, img.w, CV_8UC3);
    for (int y = 0; y < img.h; ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.w; ++x)
            row[x] = cv::Vec3b(img.at(y, x, 2), img.at(y, x, 1), img.at(y, x, 0));
    }
    if (!cv::imwrite(path.string(), bgr))
        throw Error("cannot write image: " + path.string());
}

ImagePatch load_patch(const std::filesystem::path& path) {
    RgbImage img = load_rgb(path);
    if (img.h != img.w)
        throw Error("patch raster is not square: " + path.string());
    check_patch_size(img.h);
    ImagePatch p;
    p.size = img.h;
    p.rgb = std::move(img.rgb);
    p.source_id = path.stem().string();
    return p;
}

void save_patch(const ImagePatch& patch, const std::filesystem::path& path) {
    RgbImage img;
    img.h = img.w = patch.size;
    img.rgb = patch.rgb;
    save_rgb(img, path);
}

Tensor normalize(const ImagePatch& patch) {
    const int s = patch.size;
    Tensor t(1, 3, s, s);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                t.at(0, c, y, x) = float(patch.at(y, x, c)) / 127.5f - 1.0f;
    return t;
}

ImagePatch denormalize(const Tensor& t, int sample) {
    const Shape& s = t.shape();
    if (s.c != 3 || s.h != s.w)
        throw Error("denormalize: expected Nx3xSxS tensor, got " + s.str());
    if (sample < 0 || sample >= s.n)
        throw Error("denormalize: sample index out of range");
    ImagePatch p = make_patch(s.h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                float v = std::round(127.5f * (t.at(sample, c, y, x) + 1.0f));
                p.at(y, x, c) = uint8_t(std::clamp(v, 0.0f, 255.0f));
            }
    return p;
}

Tensor stack_normalized(const std::vector<ImagePatch>& patches) {
    if (patches.empty())
        throw Error("stack_normalized: empty batch");
    const int s = patches[0].size;
    Tensor t(int(patches.size()), 3, s, s);
    for (size_t i = 0; i < patches.size(); ++i) {
        if (patches[i].size != s)
            throw Error("stack_normalized: mixed patch sizes in batch");
        Tensor one = normalize(patches[i]);
        std::copy(one.data(), one.data() + one.numel(),
                  t.data() + int64_t(i) * one.numel());
    }
    return t;
}

} // namespace san
