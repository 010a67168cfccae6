#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cdtrack/errors.hpp"
#include "cdtrack/sequence.hpp"
#include "cdtrack/synth.hpp"

using namespace cdtrack;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cdtrack_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sequence directory round trip preserves frames and boxes") {
    SynthSpec spec;
    spec.frames = 5;
    spec.motion = {{1.37, -2.11}, {0.5, 0.25}, {-3.0, 1.0}, {2.2, 0.9}};
    const SynthSequence seq = generate_sequence(spec);
    const fs::path dir = fresh_dir("seq");
    write_sequence(dir, seq.frames, seq.groundtruth);
    const Sequence back = open_sequence(dir);
    REQUIRE(back.size() == 5);
    CHECK(back.groundtruth == seq.groundtruth);
    for (std::size_t i = 0; i < 5; ++i) CHECK(back.frame(i) == seq.frames[i]);
    CHECK(back.frames[0].filename() == "0001.pgm");
}

TEST_CASE("colour frames round trip through PPM") {
    Image img(3, 4, 3);
    for (std::size_t k = 0; k < img.data.size(); ++k) img.data[k] = static_cast<float>(k % 256) / 255.0f;
    const fs::path dir = fresh_dir("ppm");
    write_image(dir / "a.ppm", img);
    CHECK(read_image(dir / "a.ppm") == img);
}

TEST_CASE("ground truth parsing accepts common separators") {
    const fs::path dir = fresh_dir("gt");
    {
        std::ofstream os(dir / "gt.txt");
        os << "11,21,30,40\n";
        os << "12\t22\t30\t40\n";
        os << "13 23 30 40\r\n";
        os << "14;24;30;40\n\n";
    }
    const auto boxes = read_groundtruth(dir / "gt.txt");
    REQUIRE(boxes.size() == 4);
    CHECK(boxes[0] == Box{10, 20, 30, 40});
    CHECK(boxes[3] == Box{13, 23, 30, 40});
    {
        std::ofstream os(dir / "bad.txt");
        os << "1,2,3\n";
    }
    CHECK_THROWS_AS(read_groundtruth(dir / "bad.txt"), FormatError);
}

TEST_CASE("PGM header parsing handles comments and 16-bit data") {
    const fs::path dir = fresh_dir("pgm");
    {
        std::ofstream os(dir / "c.pgm", std::ios::binary);
        os << "P5\n# comment\n2 1\n65535\n";
        const unsigned char px[4] = {0xff, 0xff, 0x00, 0x00};
        os.write(reinterpret_cast<const char*>(px), 4);
    }
    const Image img = read_image(dir / "c.pgm");
    CHECK(img.width == 2);
    CHECK(img.at(0, 0) == 1.0f);
    CHECK(img.at(0, 1) == 0.0f);
    {
        std::ofstream os(dir / "t.pgm", std::ios::binary);
        os << "P5\n4 4\n255\n";
        os << "ab";
    }
    CHECK_THROWS_AS(read_image(dir / "t.pgm"), FormatError);
}

TEST_CASE("missing sequence pieces are reported") {
    const fs::path dir = fresh_dir("missing");
    CHECK_THROWS_AS(open_sequence(dir), FormatError);
}
