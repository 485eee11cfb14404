#include "facefuse/data/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "facefuse/error.hpp"

namespace facefuse {
namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t number(const char* field) {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_++] - '0');
            if (++digits > 9) throw IngestionError(std::string("image header: ") + field + " too large");
        }
        if (digits == 0) throw IngestionError(std::string("image header: missing ") + field);
        return value;
    }

    std::size_t payload_start() {
        // Exactly one whitespace byte separates maxval from the raster.
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw IngestionError("image header: expected whitespace before raster");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

Tensor<double> decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw IngestionError("image: not a binary PGM (P5) or PPM (P6) file");
    }
    const std::size_t channels = bytes[1] == '5' ? 1 : 3;
    HeaderReader header(bytes);
    const std::size_t width = header.number("width");
    const std::size_t height = header.number("height");
    const std::size_t maxval = header.number("maxval");
    if (width == 0 || height == 0) throw IngestionError("image header: zero width or height");
    if (maxval == 0 || maxval > 255) {
        throw IngestionError("image header: maxval " + std::to_string(maxval) + " unsupported (1..255)");
    }
    const std::size_t start = header.payload_start();
    const std::size_t needed = width * height * channels;
    if (bytes.size() < start || bytes.size() - start < needed) {
        throw IngestionError("image: truncated raster (" + std::to_string(bytes.size() - std::min(start, bytes.size())) +
                             " of " + std::to_string(needed) + " bytes)");
    }
    Tensor<double> image(Shape{channels, height, width});
    const double denom = static_cast<double>(maxval);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                const std::uint8_t raw = bytes[start + (y * width + x) * channels + c];
                image.at(c, y, x) = std::min(1.0, raw / denom);
            }
        }
    }
    return image;
}

Tensor<double> decode_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open image " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes);
    } catch (const IngestionError& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_image(const Tensor<double>& image) {
    if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
        throw DimensionError("encode_image expects [1,H,W] or [3,H,W], got " + to_string(image.shape()));
    }
    const std::size_t channels = image.dim(0), height = image.dim(1), width = image.dim(2);
    const std::string header = std::string(channels == 1 ? "P5" : "P6") + "\n" + std::to_string(width) + " " +
                               std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + image.size());
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < channels; ++c) {
                const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
                bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
            }
        }
    }
    return bytes;
}

void write_image(const Tensor<double>& image, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_image(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing image " + path.string());
}

template <class Real>
Tensor<Real> normalize_image(const Tensor<double>& image) {
    double mean = 0;
    for (double v : image.data()) mean += v;
    mean /= static_cast<double>(image.size());
    Tensor<Real> out(image.shape());
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = static_cast<Real>((image[i] - mean) / 0.5);
    return out;
}

template Tensor<float> normalize_image(const Tensor<double>&);
template Tensor<double> normalize_image(const Tensor<double>&);

}  // namespace facefuse
