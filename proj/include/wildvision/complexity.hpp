#pragma once

// Dataset complexity measures: per-channel Shannon entropy, local (disk
// neighborhood) entropy, bilinear subsampling, and PCA cumulative explained
// variance of grayscale thumbnails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wildvision/error.hpp"
#include "wildvision/image.hpp"
#include "wildvision/metrics.hpp"
#include "wildvision/parallel.hpp"

namespace wildvision {

using Histogram = std::array<std::int64_t, 256>;

inline Histogram histogram(std::span<const std::uint8_t> pixels) {
    Histogram h{};
    for (auto v : pixels) ++h[v];
    return h;
}

/// Entropy in bits of a histogram with `total` samples; empty bins skipped.
inline double histogram_entropy(const Histogram& h, std::int64_t total) {
    double bits = 0;
    const auto n = static_cast<double>(total);
    for (auto c : h) {
        if (c == 0) continue;
        const double q = static_cast<double>(c) / n;
        bits -= q * std::log2(q);
    }
    return std::max(0.0, bits);
}

/// Shannon entropy (bits) of the 256-bin intensity histogram.
inline double shannon_entropy(std::span<const std::uint8_t> pixels) {
    if (pixels.empty()) throw Error(Errc::EmptyImage, "shannon_entropy of an empty image");
    return histogram_entropy(histogram(pixels), static_cast<std::int64_t>(pixels.size()));
}

inline double shannon_entropy(const Image& channel) {
    if (channel.empty() || channel.channels != 1)
        throw Error(Errc::EmptyImage, "shannon_entropy needs a non-empty single-channel image");
    return shannon_entropy(std::span<const std::uint8_t>(channel.data));
}

struct ChannelEntropy {
    double red = 0;
    double green = 0;
    double blue = 0;
};

inline ChannelEntropy channel_entropies(const Image& rgb) {
    if (rgb.empty() || rgb.channels != 3) throw Error(Errc::EmptyImage, "channel_entropies needs an RGB image");
    return {shannon_entropy(extract_channel(rgb, 0)), shannon_entropy(extract_channel(rgb, 1)),
            shannon_entropy(extract_channel(rgb, 2))};
}

struct LocalEntropyStats {
    double mean = 0;
    double std = 0;
    double max = 0;
    double min = 0;
    int radius_px = 10;
};

struct LocalEntropyMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    LocalEntropyStats stats;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Mirror index without repeating the edge sample (d c b | a b c d | c b a).
inline int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

/// Half-widths of the digital disk dx^2 + dy^2 <= r^2, indexed by dy + r.
inline std::vector<int> disk_half_widths(int radius) {
    std::vector<int> hw(static_cast<std::size_t>(2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy) {
        int w = 0;
        while ((w + 1) * (w + 1) + dy * dy <= radius * radius) ++w;
        hw[static_cast<std::size_t>(dy + radius)] = w;
    }
    return hw;
}

inline LocalEntropyStats summarize_values(std::span<const double> values, int radius) {
    CompensatedSum sum;
    double lo = values.front(), hi = values.front();
    for (double v : values) {
        sum.add(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double mean = sum.value() / static_cast<double>(values.size());
    CompensatedSum ss;
    for (double v : values) ss.add((v - mean) * (v - mean));
    return {mean, std::sqrt(ss.value() / static_cast<double>(values.size())), hi, lo, radius};
}

/// Per-pixel entropy of the disk neighborhood of `radius_px`, reflected at the
/// borders. A sliding histogram along each row keeps the cost at O(radius)
/// per pixel.
inline LocalEntropyMap local_entropy(const Image& channel, int radius_px = 10) {
    if (channel.empty() || channel.channels != 1)
        throw Error(Errc::EmptyImage, "local_entropy needs a non-empty single-channel image");
    if (radius_px < 1) throw Error(Errc::InvalidArgument, "local_entropy radius must be >= 1");

    const int w = channel.width, h = channel.height;
    const auto hw = disk_half_widths(radius_px);
    std::int64_t n = 0;
    for (int v : hw) n += 2 * v + 1;

    // c*log2(c) for every count a bin can reach.
    std::vector<double> clogc(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::int64_t c = 1; c <= n; ++c) clogc[c] = static_cast<double>(c) * std::log2(static_cast<double>(c));
    const double log2n = std::log2(static_cast<double>(n));
    const double ceiling = std::min(8.0, log2n);

    LocalEntropyMap out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h), {}};
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        Histogram hist{};
        int occupied = 0;
        double s = 0;  // sum of c*log2(c) over bins
        auto bump = [&](std::uint8_t v, int delta) {
            auto& c = hist[v];
            s -= clogc[c];
            if (c == 0) ++occupied;
            c += delta;
            if (c == 0) --occupied;
            s += clogc[c];
        };
        auto px = [&](int x, int yy) { return channel.at(reflect_index(x, w), reflect_index(yy, h)); };

        for (int dy = -radius_px; dy <= radius_px; ++dy) {
            const int half = hw[static_cast<std::size_t>(dy + radius_px)];
            for (int dx = -half; dx <= half; ++dx) bump(px(dx, y + dy), +1);
        }
        for (int x = 0;; ++x) {
            double e = occupied <= 1 ? 0.0 : log2n - s / static_cast<double>(n);
            out.values[static_cast<std::size_t>(y) * w + x] = std::clamp(e, 0.0, ceiling);
            if (x + 1 == w) break;
            for (int dy = -radius_px; dy <= radius_px; ++dy) {
                const int half = hw[static_cast<std::size_t>(dy + radius_px)];
                bump(px(x - half, y + dy), -1);
                bump(px(x + 1 + half, y + dy), +1);
            }
        }
    });
    out.stats = summarize_values(out.values, radius_px);
    return out;
}

/// Round half to even, saturated to [0, 255].
inline std::uint8_t round_to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

/// Bilinear resize with pixel-center alignment; each channel independent.
inline Image subsample(const Image& src, int target_w = 300, int target_h = 300) {
    if (src.empty()) throw Error(Errc::EmptyImage, "subsample of an empty image");
    if (target_w < 1 || target_h < 1) throw Error(Errc::InvalidArgument, "subsample target must be >= 1x1");
    if (src.width == target_w && src.height == target_h) return src;

    auto axis = [](int dst_len, int src_len) {
        struct Tap {
            int i0, i1;
            double frac;
        };
        std::vector<Tap> taps(static_cast<std::size_t>(dst_len));
        const double scale = static_cast<double>(src_len) / dst_len;
        for (int d = 0; d < dst_len; ++d) {
            const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_len - 1));
            const int i0 = static_cast<int>(std::floor(s));
            taps[static_cast<std::size_t>(d)] = {i0, std::min(i0 + 1, src_len - 1), s - i0};
        }
        return taps;
    };
    const auto xs = axis(target_w, src.width);
    const auto ys = axis(target_h, src.height);

    Image out(target_w, target_h, src.channels);
    for (int y = 0; y < target_h; ++y) {
        const auto& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < target_w; ++x) {
            const auto& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < src.channels; ++c) {
                const double top = (1 - tx.frac) * src.at(tx.i0, ty.i0, c) + tx.frac * src.at(tx.i1, ty.i0, c);
                const double bot = (1 - tx.frac) * src.at(tx.i0, ty.i1, c) + tx.frac * src.at(tx.i1, ty.i1, c);
                out.at(x, y, c) = round_to_byte((1 - ty.frac) * top + ty.frac * bot);
            }
        }
    }
    return out;
}

/// BT.601 grayscale as reals in [0, 255]; single-channel input passes through.
inline Eigen::VectorXd grayscale_vector(const Image& img) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(img.pixel_count()));
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        if (img.channels == 1) {
            v[static_cast<Eigen::Index>(i)] = img.data[i];
        } else {
            const auto* p = &img.data[i * img.channels];
            v[static_cast<Eigen::Index>(i)] = (299.0 * p[0] + 587.0 * p[1] + 114.0 * p[2]) / 1000.0;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// PCA

enum class PcaRoute {
    Automatic,   ///< whichever of the two matrices is smaller
    Gram,        ///< eigenvalues of Xc Xc^T (n x n)
    Covariance,  ///< eigenvalues of Xc^T Xc (d x d)
};

/// Nonzero-spectrum eigenvalues of the centered data, descending, unnormalized.
/// Both routes share the same nonzero eigenvalues; the 1/(n-1) factor cancels
/// in every ratio.
inline std::vector<double> pca_spectrum(const Eigen::MatrixXd& data, PcaRoute route = PcaRoute::Automatic) {
    if (data.rows() < 2) throw Error(Errc::InsufficientImages, "PCA needs at least two samples");
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    if (route == PcaRoute::Automatic) route = data.rows() <= data.cols() ? PcaRoute::Gram : PcaRoute::Covariance;

    const Eigen::MatrixXd m = route == PcaRoute::Gram ? Eigen::MatrixXd(centered * centered.transpose())
                                                      : Eigen::MatrixXd(centered.transpose() * centered);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error(Errc::DegenerateVariance, "eigendecomposition failed");
    std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    for (auto& v : ev) v = std::max(v, 0.0);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

/// Cumulative explained-variance fraction for every k = 1..rank.
inline std::vector<double> cumulative_fractions(const std::vector<double>& spectrum) {
    CompensatedSum total;
    for (double v : spectrum) total.add(v);
    if (!(total.value() > 0)) throw Error(Errc::DegenerateVariance, "dataset has zero total variance");
    std::vector<double> out;
    out.reserve(spectrum.size());
    CompensatedSum running;
    for (double v : spectrum) {
        running.add(v);
        out.push_back(std::min(1.0, running.value() / total.value()));
    }
    return out;
}

struct PcaVarianceReport {
    int k = 3;
    double cumulative_fraction = 0;
    int resize = 200;
    std::vector<double> cumulative;  ///< fraction for k = 1, 2, ...
};

inline PcaVarianceReport pca_report_from_matrix(const Eigen::MatrixXd& data, int k, int resize,
                                                PcaRoute route = PcaRoute::Automatic) {
    if (k < 1) throw Error(Errc::InvalidArgument, "PCA k must be >= 1");
    const auto cumulative = cumulative_fractions(pca_spectrum(data, route));
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k), cumulative.size()) - 1;
    return {k, cumulative[idx], resize, cumulative};
}

/// Thumbnail (side x side) grayscale vectors stacked as rows.
inline Eigen::MatrixXd pca_matrix(const std::vector<Image>& images, int side = 200) {
    Eigen::MatrixXd data(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(side) * side);
    parallel_for(images.size(), [&](std::size_t i) {
        data.row(static_cast<Eigen::Index>(i)) = grayscale_vector(subsample(images[i], side, side)).transpose();
    });
    return data;
}

/// Cumulative explained variance of the top-k components of the dataset,
/// after resizing each image to side x side and reducing it to grayscale.
inline PcaVarianceReport pca_explained_variance(const std::vector<Image>& images, int k = 3, int side = 200,
                                                PcaRoute route = PcaRoute::Automatic) {
    if (images.size() < 2) throw Error(Errc::InsufficientImages, "PCA needs at least two images");
    return pca_report_from_matrix(pca_matrix(images, side), k, side, route);
}

// ---------------------------------------------------------------------------
// Dataset report

struct ComplexityOptions {
    int size = 300;         ///< subsample target side; 0 keeps native size
    int radius_px = 10;
    bool local = true;      ///< compute green local-entropy statistics
    int pca_k = 3;          ///< 0 disables PCA
    int pca_side = 200;
};

struct ComplexityReport {
    std::string dataset_name;
    std::size_t n_images = 0;
    std::optional<std::pair<int, int>> image_size;  ///< empty when images differ
    ChannelEntropy mean_entropy;
    std::optional<LocalEntropyStats> local_green;   ///< across per-image map means
    std::optional<PcaVarianceReport> pca;
};

struct ImageMeasures {
    ChannelEntropy entropy;
    double local_green_mean = 0;
    int width = 0, height = 0;
};

inline ImageMeasures measure_image(const Image& rgb, const ComplexityOptions& opt) {
    const Image img = opt.size > 0 ? subsample(rgb, opt.size, opt.size) : rgb;
    ImageMeasures m{channel_entropies(img), 0.0, img.width, img.height};
    if (opt.local) m.local_green_mean = local_entropy(extract_channel(img, 1), opt.radius_px).stats.mean;
    return m;
}

/// Report over `count` images produced on demand by `load(i)`. Only the
/// measures and PCA thumbnails are retained, so full-size frames never need
/// to be resident together.
template <class Loader>
ComplexityReport complexity_report(std::string name, std::size_t count, Loader&& load,
                                   const ComplexityOptions& opt = {}) {
    if (count == 0) throw Error(Errc::EmptyInput, "dataset '" + name + "' has no images");
    const bool with_pca = opt.pca_k > 0 && count >= 2;
    std::vector<ImageMeasures> per(count);
    Eigen::MatrixXd thumbs;
    if (with_pca) thumbs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(opt.pca_side) * opt.pca_side);
    parallel_for(count, [&](std::size_t i) {
        const Image img = load(i);
        per[i] = measure_image(img, opt);
        if (with_pca)
            thumbs.row(static_cast<Eigen::Index>(i)) =
                grayscale_vector(subsample(img, opt.pca_side, opt.pca_side)).transpose();
    });

    ComplexityReport r;
    r.dataset_name = std::move(name);
    r.n_images = count;
    const bool uniform = std::all_of(per.begin(), per.end(), [&](const ImageMeasures& m) {
        return m.width == per.front().width && m.height == per.front().height;
    });
    if (uniform) r.image_size = std::pair{per.front().width, per.front().height};

    CompensatedSum red, green, blue;
    std::vector<double> local_means;
    for (const auto& m : per) {
        red.add(m.entropy.red);
        green.add(m.entropy.green);
        blue.add(m.entropy.blue);
        local_means.push_back(m.local_green_mean);
    }
    const auto n = static_cast<double>(per.size());
    r.mean_entropy = {red.value() / n, green.value() / n, blue.value() / n};
    if (opt.local) r.local_green = summarize_values(local_means, opt.radius_px);
    if (with_pca) r.pca = pca_report_from_matrix(thumbs, opt.pca_k, opt.pca_side);
    return r;
}

inline ComplexityReport complexity_report(std::string name, const std::vector<Image>& images,
                                          const ComplexityOptions& opt = {}) {
    return complexity_report(std::move(name), images.size(), [&](std::size_t i) { return images[i]; }, opt);
}

/// Report over every PNG/JPEG in a directory.
inline ComplexityReport complexity_report(const std::filesystem::path& dir, const ComplexityOptions& opt = {}) {
    const auto files = list_images(dir);
    auto name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    return complexity_report(std::move(name), files.size(), [&](std::size_t i) { return read_rgb(files[i]); }, opt);
}

/// Flat metric rows in table order: (key, value).
inline std::vector<std::pair<std::string, double>> report_rows(const ComplexityReport& r) {
    std::vector<std::pair<std::string, double>> rows;
    rows.emplace_back("number_of_images", static_cast<double>(r.n_images));
    rows.emplace_back("mean_shannon_entropy_green", r.mean_entropy.green);
    rows.emplace_back("mean_shannon_entropy_red", r.mean_entropy.red);
    rows.emplace_back("mean_shannon_entropy_blue", r.mean_entropy.blue);
    if (r.local_green) {
        const auto tag = "local_" + std::to_string(r.local_green->radius_px) + "px_entropy_green";
        rows.emplace_back("mean_" + tag, r.local_green->mean);
        rows.emplace_back("std_" + tag, r.local_green->std);
        rows.emplace_back("max_" + tag, r.local_green->max);
        rows.emplace_back("min_" + tag, r.local_green->min);
    }
    if (r.pca)
        rows.emplace_back("pca_top_" + std::to_string(r.pca->k) + "_cumulative_explained_variance",
                          r.pca->cumulative_fraction);
    return rows;
}

inline nlohmann::ordered_json to_json(const ComplexityReport& r) {
    nlohmann::ordered_json j;
    j["dataset_name"] = r.dataset_name;
    if (r.image_size)
        j["image_size"] = {r.image_size->first, r.image_size->second};
    else
        j["image_size"] = nullptr;
    for (const auto& [key, value] : report_rows(r)) {
        if (key == "number_of_images")
            j[key] = r.n_images;
        else
            j[key] = value;
    }
    if (r.pca) j["pca_resize"] = {r.pca->resize, r.pca->resize};
    return j;
}

}  // namespace wildvision
