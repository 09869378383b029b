// Shared plumbing for the CLI commands: atomic output writes, input
// gathering, the JSON report envelope, and a small parallel-for.
#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "blurmap/config.hpp"
#include "blurmap/fmap.hpp"
#include "blurmap/png_io.hpp"

namespace bmtool {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kSchemaVersion = 1;

/// Every JSON report starts from this envelope.
inline json envelope(const blurmap::RunConfig& cfg) {
    return json{{"schema_version", kSchemaVersion}, {"config", cfg.to_json()}};
}

inline void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json_atomic(const std::string& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

inline void write_fmap_atomic(const std::string& path, const blurmap::GrayImage& map) {
    const std::string tmp = path + ".tmp";
    blurmap::write_fmap(tmp, map);
    std::filesystem::rename(tmp, path);
}

inline void write_png_gray_atomic(const std::string& path, const blurmap::GrayImage& img) {
    const std::string tmp = path + ".tmp";
    blurmap::write_png_gray(tmp, img);
    std::filesystem::rename(tmp, path);
}

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e == ext;
}

/// Expands files and directories into a sorted list of PNG paths.
/// Explicitly named files are kept as given; directories are scanned for
/// *.png non-recursively.
inline std::vector<std::string> gather_images(const std::vector<std::string>& inputs) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && has_extension(entry.path(), ".png"))
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    return files;
}

/// Output stems for a list of input files; duplicate stems get a numeric
/// suffix so outputs never collide.
inline std::vector<std::string> unique_stems(const std::vector<std::string>& files) {
    std::vector<std::string> stems;
    stems.reserve(files.size());
    std::vector<std::string> seen;
    for (const auto& f : files) {
        std::string s = std::filesystem::path(f).stem().string();
        std::string candidate = s;
        int suffix = 2;
        while (std::find(seen.begin(), seen.end(), candidate) != seen.end())
            candidate = s + "_" + std::to_string(suffix++);
        seen.push_back(candidate);
        stems.push_back(candidate);
    }
    return stems;
}

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception wins and is
/// rethrown on the calling thread.
inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<size_t>(static_cast<size_t>(jobs), n));
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Reads a map from .fmap or grayscale .png. PNG values land in [0,1];
/// with png_signed they are shifted by -0.5 to act as a signed carrier.
inline blurmap::GrayImage read_map_auto(const std::string& path, bool png_signed = false) {
    std::filesystem::path p(path);
    if (has_extension(p, ".png")) {
        blurmap::GrayImage img = blurmap::read_png_gray(path);
        if (png_signed)
            for (float& v : img.data) v -= 0.5f;
        return img;
    }
    return blurmap::read_fmap(path);
}

/// Clamps a loaded map into [0,1] for use as a normalized defocus map.
inline blurmap::GrayImage clamp01(blurmap::GrayImage img) {
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

/// Optional nearest/bilinear pre-resize of decoded RGB inputs.
inline blurmap::RgbImage resize_rgb(const blurmap::RgbImage& img, int w, int h,
                                    const std::string& filter) {
    if (w < 1 || h < 1) throw std::invalid_argument("resize: target must be >= 1x1");
    blurmap::RgbImage out(w, h);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    const bool nearest = filter == "nearest";
    if (!nearest && filter != "bilinear")
        throw std::invalid_argument("resize: filter must be nearest or bilinear");
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            if (nearest) {
                const int xi = std::clamp(static_cast<int>(std::lround(fx)), 0, img.width - 1);
                const int yi = std::clamp(static_cast<int>(std::lround(fy)), 0, img.height - 1);
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(xi, yi, c);
            } else {
                const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
                const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
                const int x1 = std::min(x0 + 1, img.width - 1);
                const int y1 = std::min(y0 + 1, img.height - 1);
                const double tx = std::clamp(fx - x0, 0.0, 1.0);
                const double ty = std::clamp(fy - y0, 0.0, 1.0);
                for (int c = 0; c < 3; ++c) {
                    const double v0 = img.at(x0, y0, c) * (1 - tx) + img.at(x1, y0, c) * tx;
                    const double v1 = img.at(x0, y1, c) * (1 - tx) + img.at(x1, y1, c) * tx;
                    out.at(x, y, c) = static_cast<float>(v0 * (1 - ty) + v1 * ty);
                }
            }
        }
    }
    return out;
}

/// Decodes a PNG and applies the configured pre-resize, if any.
inline blurmap::RgbImage load_input(const std::string& path, const blurmap::RunConfig& cfg) {
    blurmap::RgbImage img = blurmap::read_png_rgb(path);
    if (cfg.resize_width > 0 && cfg.resize_height > 0)
        img = resize_rgb(img, cfg.resize_width, cfg.resize_height, cfg.resize_filter);
    return img;
}

}  // namespace bmtool
