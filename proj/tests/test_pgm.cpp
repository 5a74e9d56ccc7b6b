#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "lusgate/errors.hpp"
#include "lusgate/pgm.hpp"
#include "lusgate/rng.hpp"
#include "support/oracles.hpp"

using namespace lusgate;
using lusgate::testing::TmpDir;

TEST_CASE("pgm round-trip preserves every byte") {
    TmpDir tmp("pgm");
    GrayImage img;
    img.h = 13;
    img.w = 7;
    img.pix.resize(13 * 7);
    Rng rng(3);
    for (auto& p : img.pix) p = static_cast<std::uint8_t>(rng.below(256));

    write_pgm(img, tmp.path / "a.pgm");
    GrayImage back = read_pgm(tmp.path / "a.pgm");
    CHECK(back.h == img.h);
    CHECK(back.w == img.w);
    CHECK(back.pix == img.pix);
}

TEST_CASE("reader accepts comments and arbitrary header whitespace") {
    TmpDir tmp("pgm-ws");
    std::ofstream os(tmp.path / "a.pgm", std::ios::binary);
    os << "P5 # format\n# a comment line\n  3\n2 # dims\n255\n";
    os.write("abcdef", 6);
    os.close();

    GrayImage img = read_pgm(tmp.path / "a.pgm");
    CHECK(img.w == 3);
    CHECK(img.h == 2);
    CHECK(img.at(0, 0) == 'a');
    CHECK(img.at(1, 2) == 'f');
}

TEST_CASE("reader rejects wrong magic, maxval, dims, and short pixel data") {
    TmpDir tmp("pgm-bad");
    auto write_file = [&](const std::string& text) {
        std::ofstream os(tmp.path / "bad.pgm", std::ios::binary | std::ios::trunc);
        os << text;
    };

    SUBCASE("magic") {
        write_file("P2\n2 2\n255\nabcd");
        CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), IoError);
    }
    SUBCASE("maxval") {
        write_file("P5\n2 2\n65535\nabcd");
        CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), IoError);
    }
    SUBCASE("dims") {
        write_file("P5\n0 2\n255\n");
        CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), IoError);
    }
    SUBCASE("truncated") {
        write_file("P5\n2 2\n255\nab");
        CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), IoError);
    }
    SUBCASE("missing") { CHECK_THROWS_AS(read_pgm(tmp.path / "absent.pgm"), IoError); }
}

TEST_CASE("tensor conversion clamps, quantizes to nearest, and inverts") {
    Tensor t(1, 5, 1);
    t.v = {-0.25, 0.0, 0.5, 1.0, 1.75};
    GrayImage img = tensor_to_image(t);
    CHECK(img.pix == std::vector<std::uint8_t>{0, 0, 128, 255, 255});

    Tensor back = image_to_tensor(img);
    CHECK(back.h == 1);
    CHECK(back.w == 5);
    CHECK(back.v[2] == doctest::Approx(128.0 / 255.0));

    // 8-bit values survive a tensor round-trip exactly
    GrayImage all;
    all.h = 16;
    all.w = 16;
    all.pix.resize(256);
    for (int i = 0; i < 256; ++i) all.pix[i] = static_cast<std::uint8_t>(i);
    CHECK(tensor_to_image(image_to_tensor(all)).pix == all.pix);
}

TEST_CASE("ppm writes a parseable P6 header and full payload") {
    TmpDir tmp("ppm");
    std::vector<std::uint8_t> rgb(2 * 3 * 3, 200);
    write_ppm(2, 3, rgb, tmp.path / "a.ppm");

    std::ifstream is(tmp.path / "a.ppm", std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    CHECK(magic == "P6");
    CHECK(w == 3);
    CHECK(h == 2);
    CHECK(maxval == 255);
    is.get();
    std::vector<char> payload(rgb.size());
    is.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    CHECK(is.gcount() == static_cast<std::streamsize>(rgb.size()));
}
