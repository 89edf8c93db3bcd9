#include "sfcn/image_io.hpp"

#include <fstream>

namespace sfcn {
namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_token(std::istream& in) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = in.get();
    c = in.get();
  }
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw IoError("malformed netpbm header");
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pix.data()), std::streamsize(img.pix.size()));
  if (!out) throw IoError("short write to " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  char m0 = char(in.get()), m1 = char(in.get());
  if (m0 != 'P' || m1 != '5') throw IoError(path.string() + " is not binary PGM (P5)");
  GrayImage img;
  img.w = std::size_t(next_token(in));
  img.h = std::size_t(next_token(in));
  if (next_token(in) != 255) throw IoError(path.string() + ": only maxval 255 supported");
  img.pix.resize(img.w * img.h);
  in.read(reinterpret_cast<char*>(img.pix.data()), std::streamsize(img.pix.size()));
  if (std::size_t(in.gcount()) != img.pix.size())
    throw IoError(path.string() + ": truncated pixel data");
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  auto out = open_out(path);
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pix.data()), std::streamsize(img.pix.size()));
  if (!out) throw IoError("short write to " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  char m0 = char(in.get()), m1 = char(in.get());
  if (m0 != 'P' || m1 != '6') throw IoError(path.string() + " is not binary PPM (P6)");
  RgbImage img;
  img.w = std::size_t(next_token(in));
  img.h = std::size_t(next_token(in));
  if (next_token(in) != 255) throw IoError(path.string() + ": only maxval 255 supported");
  img.pix.resize(img.w * img.h * 3);
  in.read(reinterpret_cast<char*>(img.pix.data()), std::streamsize(img.pix.size()));
  if (std::size_t(in.gcount()) != img.pix.size())
    throw IoError(path.string() + ": truncated pixel data");
  return img;
}

}  // namespace sfcn
