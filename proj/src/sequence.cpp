#include "cdtrack/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "cdtrack/errors.hpp"

#ifdef CDTRACK_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace fs = std::filesystem;

namespace cdtrack {

namespace {

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

// Next header token of a PNM file, skipping comments.
std::string pnm_token(std::istream& is) {
    std::string tok;
    int ch = 0;
    while ((ch = is.get()) != EOF) {
        if (ch == '#') {
            while ((ch = is.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

Image read_pnm(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open image " + path.string());
    const std::string magic = pnm_token(is);
    if (magic != "P5" && magic != "P6") throw FormatError("unsupported PNM type in " + path.string());
    const int w = std::stoi(pnm_token(is));
    const int h = std::stoi(pnm_token(is));
    const int maxval = std::stoi(pnm_token(is));
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError("bad PNM header in " + path.string());
    const int c = magic == "P5" ? 1 : 3;
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * c * bytes);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw TruncatedError("PNM payload truncated in " + path.string());
    }
    Image img(h, w, c);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const unsigned v = bytes == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        img.data[i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
    return img;
}

}  // namespace

Image read_image(const fs::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
#ifdef CDTRACK_HAVE_OPENCV
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw FormatError("cannot decode image " + path.string());
    const int c = m.channels() >= 3 ? 3 : 1;
    const double scale = m.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
    Image img(m.rows, m.cols, c);
    for (int r = 0; r < m.rows; ++r) {
        for (int col = 0; col < m.cols; ++col) {
            for (int ch = 0; ch < c; ++ch) {
                // OpenCV stores BGR(A); Image stores RGB.
                const int src = c == 3 ? 2 - ch : 0;
                double v = 0.0;
                if (m.depth() == CV_16U) {
                    v = m.ptr<std::uint16_t>(r)[col * m.channels() + src];
                } else {
                    v = m.ptr<std::uint8_t>(r)[col * m.channels() + src];
                }
                img.at(r, col, ch) = static_cast<float>(v * scale);
            }
        }
    }
    return img;
#else
    throw FormatError("unsupported image format (built without OpenCV): " + path.string());
#endif
}

void write_image(const fs::path& path, const Image& img) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw FormatError("write failed for " + path.string());
}

std::vector<Box> read_groundtruth(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open ground truth " + path.string());
    std::vector<Box> boxes;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        for (char& ch : line) {
            if (ch == ',' || ch == '\t' || ch == ';') ch = ' ';
        }
        std::istringstream ls(line);
        std::vector<double> v;
        std::string tok;
        while (ls >> tok) v.push_back(std::stod(tok));
        if (v.empty()) continue;
        if (v.size() != 4) {
            throw FormatError("ground truth line " + std::to_string(lineno) + " does not have 4 values");
        }
        boxes.push_back(Box{v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
    }
    return boxes;
}

void write_groundtruth(const fs::path& path, const std::vector<Box>& boxes) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << std::setprecision(17);
    for (const auto& b : boxes) os << b.x + 1.0 << ',' << b.y + 1.0 << ',' << b.w << ',' << b.h << '\n';
}

Sequence open_sequence(const fs::path& dir) {
    Sequence seq;
    seq.root = dir;
    const fs::path img_dir = dir / "img";
    if (!fs::is_directory(img_dir)) throw FormatError("sequence has no img/ directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower_ext(entry.path());
        if (ext == ".pgm" || ext == ".ppm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            seq.frames.push_back(entry.path());
        }
    }
    std::sort(seq.frames.begin(), seq.frames.end());
    seq.groundtruth = read_groundtruth(dir / "groundtruth.txt");
    if (seq.frames.empty()) throw FormatError("sequence has no frames: " + dir.string());
    return seq;
}

void write_sequence(const fs::path& dir, const std::vector<Image>& frames, const std::vector<Box>& gt) {
    fs::create_directories(dir / "img");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::ostringstream name;
        name << std::setw(4) << std::setfill('0') << i + 1 << (frames[i].channels == 1 ? ".pgm" : ".ppm");
        write_image(dir / "img" / name.str(), frames[i]);
    }
    write_groundtruth(dir / "groundtruth.txt", gt);
}

}  // namespace cdtrack
