#include "vsrprune/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace vsrprune {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08d.png", index);
  return buf;
}

}  // namespace

void write_png(const fs::path& path, const Tensor& image) {
  const Shape s = image.shape();
  if (s.n != 1 || s.c != 3) {
    throw ShapeError("write_png: expected 1x3xHxW, got " + s.str());
  }
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(s.w) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, s.w, s.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(0, c, y, x), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor read_png(const fs::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed");
  }
  Tensor out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed reading " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  // Normalize every colour type to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": unsupported PNG layout");
  }
  out = Tensor(Shape{1, 3, h, w});
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(0, c, y, x) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0f;
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void save_frames(const fs::path& dir, const std::vector<Tensor>& frames,
                 const std::vector<Offset>& motion) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    write_png(dir / frame_name(static_cast<int>(t)), frames[t]);
  }
  std::ofstream m(dir / "motion.txt");
  for (const Offset& o : motion) m << o.dy << ' ' << o.dx << '\n';
  if (!m) throw IoError("cannot write " + (dir / "motion.txt").string());
}

FrameDir load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError(dir.string() + " holds no PNG frames");
  FrameDir out;
  for (const auto& p : files) {
    out.frames.push_back(read_png(p));
    if (!(out.frames.back().shape() == out.frames.front().shape())) {
      throw IoError(p.string() + ": frame size differs from the first frame");
    }
  }
  const fs::path mp = dir / "motion.txt";
  if (fs::exists(mp)) {
    std::ifstream in(mp);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      Offset o;
      if (!(ls >> o.dy >> o.dx)) throw IoError(mp.string() + ": bad line '" + line + "'");
      out.motion.push_back(o);
    }
    if (out.motion.size() + 1 != out.frames.size()) {
      throw IoError(mp.string() + ": expected " + std::to_string(out.frames.size() - 1) +
                    " motion lines, found " + std::to_string(out.motion.size()));
    }
  } else {
    out.motion.assign(out.frames.size() - 1, Offset{});
  }
  return out;
}

void save_sequence(const fs::path& dir, const Sequence& seq) {
  save_frames(dir / "lr", seq.frames, seq.motion);
  if (!seq.hr.empty()) {
    std::vector<Offset> hr_motion = seq.motion;
    if (!seq.frames.empty() && !seq.hr.empty()) {
      const int f = seq.hr[0].shape().h / seq.frames[0].shape().h;
      for (Offset& o : hr_motion) {
        o.dy *= f;
        o.dx *= f;
      }
    }
    save_frames(dir / "hr", seq.hr, hr_motion);
  }
}

Sequence load_sequence(const fs::path& dir) {
  Sequence seq;
  const fs::path lr = fs::is_directory(dir / "lr") ? dir / "lr" : dir;
  FrameDir l = load_frames(lr);
  seq.frames = std::move(l.frames);
  seq.motion = std::move(l.motion);
  if (fs::is_directory(dir / "hr")) {
    FrameDir h = load_frames(dir / "hr");
    if (h.frames.size() != seq.frames.size()) {
      throw IoError(dir.string() + ": lr and hr frame counts differ");
    }
    seq.hr = std::move(h.frames);
  }
  return seq;
}

}  // namespace vsrprune
