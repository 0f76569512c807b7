#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "wildvision/error.hpp"

namespace wildvision {

/// Interleaved 8-bit image, row-major. RGB order when channels == 3.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const noexcept { return width <= 0 || height <= 0 || channels <= 0; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Single-channel view (or copy) of one plane.
inline Image extract_channel(const Image& img, int channel) {
    Image out(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) out.data[i] = img.data[i * img.channels + channel];
    return out;
}

/// Copies the integer pixel rectangle [x1,x2) x [y1,y2).
inline Image crop(const Image& img, int x1, int y1, int x2, int y2) {
    if (x1 < 0 || y1 < 0 || x2 > img.width || y2 > img.height || x2 <= x1 || y2 <= y1)
        throw Error(Errc::InvalidArgument, "crop rectangle outside image");
    Image out(x2 - x1, y2 - y1, img.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(out.width) * img.channels;
    for (int y = y1; y < y2; ++y) {
        const auto* src = &img.data[(static_cast<std::size_t>(y) * img.width + x1) * img.channels];
        std::copy(src, src + row_bytes, &out.data[static_cast<std::size_t>(y - y1) * row_bytes]);
    }
    return out;
}

/// Reads PNG or JPEG as 8-bit RGB.
inline Image read_rgb(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingFrame, "no such file: " + path.string());
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error(Errc::DecodeError, "cannot decode image: " + path.string());
    Image out(bgr.cols, bgr.rows, 3);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(x, y, 0) = row[x][2];
            out.at(x, y, 1) = row[x][1];
            out.at(x, y, 2) = row[x][0];
        }
    }
    return out;
}

/// Writes a 1- or 3-channel image; format follows the file extension.
inline void write_image(const std::filesystem::path& path, const Image& img) {
    if (img.empty() || (img.channels != 1 && img.channels != 3))
        throw Error(Errc::InvalidArgument, "write_image needs a 1- or 3-channel image");
    cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 3) {
                row[3 * x + 0] = img.at(x, y, 2);
                row[3 * x + 1] = img.at(x, y, 1);
                row[3 * x + 2] = img.at(x, y, 0);
            } else {
                row[x] = img.at(x, y);
            }
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception& e) {
        throw Error(Errc::IoError, "cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw Error(Errc::IoError, "cannot write " + path.string());
}

inline bool has_image_extension(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Image files of a directory in lexicographic filename order.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw Error(Errc::IoError, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path())) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace wildvision
