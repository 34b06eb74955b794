#include "aacp/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "aacp/errors.hpp"

namespace aacp {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_extent(const std::string& tok, const std::filesystem::path& path) {
    try {
        const int v = std::stoi(tok);
        if (v <= 0) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError("ppm: bad header field '" + tok + "' in " + path.string());
    }
}

}  // namespace

void save_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("ppm: cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw DataError("ppm: short write to " + path.string());
}

Image load_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("ppm: cannot open " + path.string());
    if (next_token(in) != "P6") throw ParseError("ppm: missing P6 magic in " + path.string());
    const int w = parse_extent(next_token(in), path);
    const int h = parse_extent(next_token(in), path);
    const int maxval = parse_extent(next_token(in), path);
    if (maxval != 255) throw ParseError("ppm: only 8-bit images supported, " + path.string());
    Image img(h, w);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw ParseError("ppm: truncated pixel data in " + path.string());
    return img;
}

void save_pgm(const Heatmap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("pgm: cannot open " + path.string() + " for writing");
    out << "P5\n" << map.width << " " << map.height << "\n255\n";
    std::vector<std::uint8_t> bytes(map.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.values[i], 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("pgm: short write to " + path.string());
}

Image overlay_heatmap(const Image& img, const Heatmap& map, double alpha) {
    if (map.height <= 0 || map.width <= 0) throw UsageError("overlay: empty heatmap");
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int my = std::min(map.height - 1, y * map.height / img.height);
            const int mx = std::min(map.width - 1, x * map.width / img.width);
            const double v = std::clamp(map.at(my, mx), 0.0, 1.0);
            const double heat_r = 255.0 * v;
            const double heat_g = 0.0;
            const double heat_b = 255.0 * (1.0 - v);
            for (int c = 0; c < 3; ++c) {
                const double heat = c == 0 ? heat_r : c == 1 ? heat_g : heat_b;
                const double mixed = (1.0 - alpha) * img.at(y, x, c) + alpha * heat;
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(mixed, 0.0, 255.0)));
            }
        }
    }
    return out;
}

}  // namespace aacp
