#include "lusgate/pgm.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "lusgate/errors.hpp"

namespace lusgate {
namespace {

// next whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& is) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw IoError("truncated image header");
    return tok;
}

int parse_dim(const std::string& tok, const char* what) {
    int value = 0;
    try {
        std::size_t pos = 0;
        value = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
        throw IoError(std::string("bad image header: ") + what + " is not a number");
    }
    if (value <= 0 || value > 1 << 15) throw IoError(std::string("bad image header: ") + what + " out of range");
    return value;
}

}  // namespace

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    if (img.h <= 0 || img.w <= 0) throw InvalidArgument("cannot write an empty image");
    if (img.pix.size() != static_cast<std::size_t>(img.h) * img.w)
        throw InvalidArgument("image pixel buffer does not match its dimensions");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open image for writing: " + path.string());
    os << "P5\n" << img.w << " " << img.h << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pix.data()), static_cast<std::streamsize>(img.pix.size()));
    if (!os) throw IoError("failed writing image: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image: " + path.string());
    if (next_token(is) != "P5") throw IoError("not a binary PGM (P5): " + path.string());
    GrayImage img;
    img.w = parse_dim(next_token(is), "width");
    img.h = parse_dim(next_token(is), "height");
    int maxval = parse_dim(next_token(is), "maxval");
    if (maxval != 255) throw IoError("unsupported PGM maxval (expected 255): " + path.string());
    // header ends after exactly one whitespace byte, already consumed by next_token
    img.pix.resize(static_cast<std::size_t>(img.h) * img.w);
    is.read(reinterpret_cast<char*>(img.pix.data()), static_cast<std::streamsize>(img.pix.size()));
    if (!is) throw IoError("truncated PGM pixel data: " + path.string());
    return img;
}

void write_ppm(int h, int w, const std::vector<std::uint8_t>& rgb, const std::filesystem::path& path) {
    if (h <= 0 || w <= 0) throw InvalidArgument("cannot write an empty image");
    if (rgb.size() != static_cast<std::size_t>(h) * w * 3)
        throw InvalidArgument("rgb buffer does not match its dimensions");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open image for writing: " + path.string());
    os << "P6\n" << w << " " << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!os) throw IoError("failed writing image: " + path.string());
}

GrayImage tensor_to_image(const Tensor& t) {
    if (t.c != 1) throw InvalidArgument("expected a single-channel tensor");
    GrayImage img;
    img.h = t.h;
    img.w = t.w;
    img.pix.resize(t.v.size());
    for (std::size_t i = 0; i < t.v.size(); ++i) {
        double x = t.v[i];
        if (x < 0.0) x = 0.0;
        if (x > 1.0) x = 1.0;
        img.pix[i] = static_cast<std::uint8_t>(std::lround(x * 255.0));
    }
    return img;
}

Tensor image_to_tensor(const GrayImage& img) {
    Tensor t(img.h, img.w, 1);
    for (std::size_t i = 0; i < img.pix.size(); ++i) t.v[i] = img.pix[i] / 255.0;
    return t;
}

}  // namespace lusgate
