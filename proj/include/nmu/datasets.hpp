#ifndef NMU_DATASETS_HPP
#define NMU_DATASETS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmu/matrix.hpp"

namespace nmu {

// A stack of same-sized grayscale images: each column of the matrix is one
// image flattened row-major, intensities in [0,1] with 1 = dark.
struct ImageStack {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t count = 0;
    Mat matrix;  // (height*width) × count
};

// ---------------------------------------------------------------------------
// Swimmer dataset
//
// Canvas 20 rows × 11 columns. The torso is a 4×3 block (rows 8..11, columns
// 4..6) present in every image. Four limbs hang off the torso corners and
// each takes one of 4 positions, giving 4^4 = 256 images of 12 + 4*2 = 20
// dark pixels each.
//
// Canonical geometry, frozen here (any change breaks every reported number):
//   anchors (torso corner cells)   top-left (8,4)    top-right (8,6)
//                                  bottom-left (11,4) bottom-right (11,6)
//   each position is the 2-pixel ray anchor + t*d, t = 1..2, with the
//   direction d fanning away from the torso on the limb's own side:
//     position 0  horizontal   d = ( 0, c)
//     position 1  diagonal     d = ( r, c)
//     position 2  steep        d = (2r, c)
//     position 3  vertical     d = ( r, 0)
//   where r = -1 for top limbs, +1 for bottom limbs; c = -1 left, +1 right.
//   Limb regions are pairwise disjoint and never touch the torso block, so
//   every image lights exactly 20 of the 44 pixels ever used.
//
// Images are enumerated in odometer order over the four position indices with
// the top-left limb fastest: column c encodes (tl, tr, bl, br) as base-4
// digits, least significant first.
// ---------------------------------------------------------------------------
namespace swimmer {

struct Pixel {
    int row;
    int col;
    friend bool operator==(const Pixel& a, const Pixel& b) {
        return a.row == b.row && a.col == b.col;
    }
};

constexpr std::size_t kRows = 20;
constexpr std::size_t kCols = 11;
constexpr std::size_t kImageCount = 256;
constexpr std::size_t kLimbs = 4;
constexpr std::size_t kPositions = 4;

inline std::array<Pixel, 12> torso_pixels() {
    std::array<Pixel, 12> px{};
    std::size_t n = 0;
    for (int r = 8; r <= 11; ++r)
        for (int c = 4; c <= 6; ++c) px[n++] = Pixel{r, c};
    return px;
}

// limbs: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right
inline std::array<Pixel, 2> limb_pixels(std::size_t limb, std::size_t position) {
    if (limb >= kLimbs || position >= kPositions)
        throw std::invalid_argument("swimmer::limb_pixels: index out of range");
    const bool top = limb < 2;
    const bool left = (limb % 2) == 0;
    const int ar = top ? 8 : 11;
    const int ac = left ? 4 : 6;
    const int sr = top ? -1 : 1;
    const int sc = left ? -1 : 1;
    int dr = 0, dc = 0;
    switch (position) {
        case 0: dr = 0; dc = sc; break;       // horizontal
        case 1: dr = sr; dc = sc; break;      // diagonal
        case 2: dr = 2 * sr; dc = sc; break;  // steep
        case 3: dr = sr; dc = 0; break;       // vertical
    }
    std::array<Pixel, 2> px{};
    for (int t = 1; t <= 2; ++t) px[t - 1] = Pixel{ar + t * dr, ac + t * dc};
    return px;
}

// union of the 4 position rays of one limb (16 pixels, all distinct)
inline std::vector<Pixel> limb_region(std::size_t limb) {
    std::vector<Pixel> region;
    for (std::size_t pos = 0; pos < kPositions; ++pos)
        for (const Pixel& p : limb_pixels(limb, pos))
            if (std::find(region.begin(), region.end(), p) == region.end())
                region.push_back(p);
    return region;
}

}  // namespace swimmer

inline ImageStack gen_swimmer() {
    using swimmer::kCols;
    using swimmer::kImageCount;
    using swimmer::kRows;

    ImageStack stack;
    stack.height = kRows;
    stack.width = kCols;
    stack.count = kImageCount;
    stack.matrix = Mat(kRows * kCols, kImageCount);

    for (std::size_t c = 0; c < kImageCount; ++c) {
        auto paint = [&](swimmer::Pixel p) {
            stack.matrix(static_cast<std::size_t>(p.row) * kCols +
                             static_cast<std::size_t>(p.col),
                         c) = 1.0;
        };
        for (const auto& p : swimmer::torso_pixels()) paint(p);
        std::size_t code = c;
        for (std::size_t limb = 0; limb < swimmer::kLimbs; ++limb) {
            const std::size_t pos = code % 4;
            code /= 4;
            for (const auto& p : swimmer::limb_pixels(limb, pos)) paint(p);
        }
    }
    return stack;
}

// ---------------------------------------------------------------------------
// Matrix text format: first line "m n", then m lines of n space-separated
// decimals, written with 17 significant digits so round trips are lossless.
// ---------------------------------------------------------------------------

inline void save_matrix(const Mat& a, const std::string& path) {
    require_nonempty(a, "save_matrix");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_matrix: cannot open " + path);
    out << a.rows() << ' ' << a.cols() << '\n';
    char buf[40];
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", a(i, j));
            if (j) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_matrix: write failed for " + path);
}

inline Mat load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_matrix: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_matrix: empty file " + path);
    std::istringstream header(line);
    long long rows = 0, cols = 0;
    std::string extra;
    if (!(header >> rows >> cols) || (header >> extra) || rows <= 0 || cols <= 0)
        throw std::runtime_error("load_matrix: malformed header in " + path);

    Mat a(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (long long i = 0; i < rows; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_matrix: missing row " + std::to_string(i + 1) +
                                     " in " + path);
        std::istringstream ls(line);
        for (long long j = 0; j < cols; ++j) {
            double x;
            if (!(ls >> x))
                throw std::runtime_error("load_matrix: bad or missing value at row " +
                                         std::to_string(i + 1) + " in " + path);
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = x;
        }
        if (ls >> extra)
            throw std::runtime_error("load_matrix: ragged row " + std::to_string(i + 1) +
                                     " in " + path);
    }
    return a;
}

// ---------------------------------------------------------------------------
// PGM (P2 ascii / P5 binary) reading and P2 mosaic writing. Loaded pixels are
// normalized and inverted so that source black (0) maps to intensity 1.
// ---------------------------------------------------------------------------

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {  // comment to end of line
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return 1;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok.empty() ? 0 : 1;
}

inline long pgm_int_token(std::istream& in, const std::string& path) {
    std::string tok;
    if (!pgm_next_token(in, tok)) throw std::runtime_error("load_pgm: truncated header in " + path);
    try {
        return std::stol(tok);
    } catch (...) {
        throw std::runtime_error("load_pgm: bad header token '" + tok + "' in " + path);
    }
}

}  // namespace detail

// Reads one PGM image into a row-major intensity buffer (inverted, [0,1]).
inline std::vector<double> load_pgm(const std::string& path, std::size_t& height,
                                    std::size_t& width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_pgm: cannot open " + path);
    std::string magic;
    if (!detail::pgm_next_token(in, magic) || (magic != "P2" && magic != "P5"))
        throw std::runtime_error("load_pgm: unsupported magic number in " + path);

    const long w = detail::pgm_int_token(in, path);
    const long h = detail::pgm_int_token(in, path);
    const long maxval = detail::pgm_int_token(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("load_pgm: bad dimensions or maxval in " + path);

    width = static_cast<std::size_t>(w);
    height = static_cast<std::size_t>(h);
    const std::size_t npix = width * height;
    std::vector<double> out(npix);

    if (magic == "P2") {
        for (std::size_t i = 0; i < npix; ++i) {
            const long v = detail::pgm_int_token(in, path);
            out[i] = 1.0 - static_cast<double>(v) / static_cast<double>(maxval);
        }
    } else {
        // P5: the header's single whitespace byte was already consumed by the tokenizer
        const int bytes = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw(npix * static_cast<std::size_t>(bytes));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size()))
            throw std::runtime_error("load_pgm: truncated pixel data in " + path);
        for (std::size_t i = 0; i < npix; ++i) {
            const long v = bytes == 1 ? raw[i]
                                      : (static_cast<long>(raw[2 * i]) << 8) | raw[2 * i + 1];
            out[i] = 1.0 - static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return out;
}

// Loads every .pgm file of a directory (sorted by name) into an image stack.
inline ImageStack load_pgm_stack(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm") files.push_back(entry.path());
    }
    if (files.empty()) throw std::runtime_error("load_pgm_stack: no .pgm files in " + dir);
    std::sort(files.begin(), files.end());

    ImageStack stack;
    stack.count = files.size();
    for (std::size_t c = 0; c < files.size(); ++c) {
        std::size_t h = 0, w = 0;
        const std::vector<double> img = load_pgm(files[c].string(), h, w);
        if (c == 0) {
            stack.height = h;
            stack.width = w;
            stack.matrix = Mat(h * w, files.size());
        } else if (h != stack.height || w != stack.width) {
            throw std::runtime_error("load_pgm_stack: mixed image dimensions in " + dir);
        }
        for (std::size_t i = 0; i < img.size(); ++i) stack.matrix(i, c) = img[i];
    }
    return stack;
}

// Renders the columns of V as h×w tiles on a white grid (1-pixel separators,
// row-major tile order) and writes an ascii P2 image. Each column is rescaled
// to [0,1] on its own; dark = large.
inline void write_pgm_mosaic(const Mat& v, std::size_t h, std::size_t w,
                             std::size_t grid_cols, const std::string& path) {
    require_nonempty(v, "write_pgm_mosaic");
    if (h * w != v.rows())
        throw std::invalid_argument("write_pgm_mosaic: h*w does not match the column length");
    if (grid_cols == 0) throw std::invalid_argument("write_pgm_mosaic: grid_cols must be >= 1");

    const std::size_t r = v.cols();
    const std::size_t grid_rows = (r + grid_cols - 1) / grid_cols;
    const std::size_t out_h = grid_rows * h + (grid_rows - 1);
    const std::size_t out_w = grid_cols * w + (grid_cols - 1);
    std::vector<int> canvas(out_h * out_w, 255);  // white background and separators

    for (std::size_t k = 0; k < r; ++k) {
        double lo = v(0, k), hi = v(0, k);
        for (std::size_t i = 1; i < v.rows(); ++i) {
            lo = std::min(lo, v(i, k));
            hi = std::max(hi, v(i, k));
        }
        const double span = hi - lo;
        const std::size_t tr = k / grid_cols, tc = k % grid_cols;
        const std::size_t r0 = tr * (h + 1), c0 = tc * (w + 1);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const double raw = v(i * w + j, k);
                const double x = span > 0.0 ? (raw - lo) / span : 0.0;
                canvas[(r0 + i) * out_w + (c0 + j)] =
                    static_cast<int>(std::lround((1.0 - x) * 255.0));
            }
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_pgm_mosaic: cannot open " + path);
    out << "P2\n" << out_w << ' ' << out_h << "\n255\n";
    for (std::size_t i = 0; i < out_h; ++i) {
        for (std::size_t j = 0; j < out_w; ++j) {
            if (j) out << ' ';
            out << canvas[i * out_w + j];
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_pgm_mosaic: write failed for " + path);
}

}  // namespace nmu

#endif  // NMU_DATASETS_HPP
