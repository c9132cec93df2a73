#include "uct/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uct/errors.hpp"
#include "uct/image_io.hpp"

namespace uct {

namespace fs = std::filesystem;

DenseMap Sequence::frame(std::size_t index) const {
  if (index >= size()) {
    throw InvalidArgument("frame " + std::to_string(index) + " out of range for sequence '" + name + "' of " +
                          std::to_string(size()) + " frames");
  }
  return frames.empty() ? read_image(frame_paths[index]) : frames[index];
}

std::vector<Box> parse_groundtruth(std::string_view text) {
  std::vector<Box> boxes;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t' || c == '\r'; }, ' ');
    if (line.find_first_not_of(' ') == std::string::npos) {
      if (end == text.size()) break;
      continue;
    }
    std::istringstream fields(line);
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
        throw DataError("ground truth line " + std::to_string(line_no) + ": '" + token + "' is not a number");
      }
      values.push_back(v);
    }
    if (values.size() != 4) {
      throw DataError("ground truth line " + std::to_string(line_no) + ": expected 4 values, found " +
                      std::to_string(values.size()));
    }
    if (!(values[2] > 0.0) || !(values[3] > 0.0)) {
      throw DataError("ground truth line " + std::to_string(line_no) + ": box size must be positive");
    }
    boxes.push_back({values[0], values[1], values[2], values[3]});
    if (end == text.size()) break;
  }
  if (boxes.empty()) throw DataError("ground truth contains no boxes");
  return boxes;
}

std::string format_groundtruth(const std::vector<Box>& boxes) {
  std::string out;
  char buf[64];
  for (const Box& b : boxes) {
    const double v[4] = {b.x, b.y, b.w, b.h};
    for (int k = 0; k < 4; ++k) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[k]);
      out.append(buf, res.ptr);
      out += k == 3 ? '\n' : ',';
    }
  }
  return out;
}

Box from_one_based(const Box& b) { return {b.x - 1.0, b.y - 1.0, b.w, b.h}; }
Box to_one_based(const Box& b) { return {b.x + 1.0, b.y + 1.0, b.w, b.h}; }

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Last run of digits in the stem; -1 when there is none.
long long embedded_number(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  const auto last = stem.find_last_of("0123456789");
  if (last == std::string::npos) return -1;
  auto first = last;
  while (first > 0 && std::isdigit(static_cast<unsigned char>(stem[first - 1]))) --first;
  long long v = 0;
  std::from_chars(stem.data() + first, stem.data() + last + 1, v);
  return v;
}

}  // namespace

void sort_frame_paths(std::vector<std::string>& paths) {
  std::sort(paths.begin(), paths.end(), [](const std::string& a, const std::string& b) {
    const auto na = embedded_number(a);
    const auto nb = embedded_number(b);
    return na != nb ? na < nb : a < b;
  });
}

Sequence load_sequence(const std::string& directory) {
  const fs::path dir(directory);
  const fs::path img = dir / "img";
  const fs::path gt = dir / "groundtruth_rect.txt";
  if (!fs::is_directory(img)) throw DataError("sequence " + directory + " has no img/ folder");
  if (!fs::is_regular_file(gt)) throw DataError("sequence " + directory + " has no groundtruth_rect.txt");

  Sequence seq;
  seq.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  for (const auto& entry : fs::directory_iterator(img)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) seq.frame_paths.push_back(entry.path().string());
  }
  if (seq.frame_paths.empty()) throw DataError("sequence " + directory + " has no image frames in img/");
  sort_frame_paths(seq.frame_paths);

  std::ifstream in(gt);
  std::stringstream text;
  text << in.rdbuf();
  try {
    for (const Box& b : parse_groundtruth(text.str())) seq.boxes.push_back(from_one_based(b));
  } catch (const DataError& e) {
    throw DataError(gt.string() + ": " + e.what());
  }
  if (seq.boxes.size() > seq.frame_paths.size()) {
    seq.warnings.push_back(std::to_string(seq.boxes.size()) + " annotations for " +
                           std::to_string(seq.frame_paths.size()) + " frames; extra annotations dropped");
    seq.boxes.resize(seq.frame_paths.size());
  } else if (seq.boxes.size() < seq.frame_paths.size()) {
    seq.warnings.push_back(std::to_string(seq.frame_paths.size()) + " frames but only " +
                           std::to_string(seq.boxes.size()) + " annotations");
  }
  return seq;
}

std::vector<Sequence> load_dataset(const std::string& directory) {
  const fs::path dir(directory);
  if (!fs::is_directory(dir)) throw DataError("data directory " + directory + " does not exist");
  if (fs::is_regular_file(dir / "groundtruth_rect.txt")) return {load_sequence(directory)};
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "groundtruth_rect.txt")) {
      names.push_back(entry.path().string());
    }
  }
  if (names.empty()) throw DataError("no sequences (directories with groundtruth_rect.txt) under " + directory);
  std::sort(names.begin(), names.end());
  std::vector<Sequence> out;
  for (const auto& n : names) out.push_back(load_sequence(n));
  return out;
}

void export_sequence(const Sequence& sequence, const std::string& directory) {
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir / "img", ec);
  if (ec) throw DataError("cannot create " + (dir / "img").string() + ": " + ec.message());
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const DenseMap frame = sequence.frame(k);
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.%s", k + 1, frame.channels() == 1 ? "pgm" : "ppm");
    write_pnm((dir / "img" / name).string(), frame);
  }
  std::vector<Box> one_based;
  for (const Box& b : sequence.boxes) one_based.push_back(to_one_based(b));
  std::ofstream out(dir / "groundtruth_rect.txt");
  if (!out) throw DataError("cannot write ground truth in " + directory);
  out << format_groundtruth(one_based);
}

}  // namespace uct
