#include "fsprior/fewshot/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/imagecore/png_io.hpp"

namespace fsprior::fewshot {

namespace fs = std::filesystem;
using imagecore::BinaryMask;

bool Sample::contains(int class_id) const {
  const auto v = static_cast<std::uint8_t>(class_id + 1);
  return std::find(labels.values.begin(), labels.values.end(), v) != labels.values.end();
}

BinaryMask Sample::mask_for(int class_id) const {
  const auto v = static_cast<std::uint8_t>(class_id + 1);
  BinaryMask m(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.values.size(); ++i) m.set(i, labels.values[i] == v);
  return m;
}

SegDataset::SegDataset(std::vector<Sample> samples, std::vector<std::string> class_names)
    : samples_(std::move(samples)), class_names_(std::move(class_names)) {
  if (class_names_.size() > 254) throw std::invalid_argument("at most 254 classes fit an 8-bit label map");
  by_class_.assign(class_names_.size(), {});
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.labels.width != s.image.width() || s.labels.height != s.image.height()) {
      throw DataError("sample " + std::to_string(i) + ": label map size differs from the image");
    }
    std::vector<bool> seen(class_names_.size() + 1, false);
    for (auto v : s.labels.values) {
      if (v == 0) continue;
      if (v > class_names_.size()) throw DataError("sample " + std::to_string(i) + ": label " + std::to_string(v) + " has no class");
      seen[v] = true;
    }
    for (std::size_t c = 1; c < seen.size(); ++c) {
      if (seen[c]) by_class_[c - 1].push_back(i);
    }
  }
}

SegDataset SegDataset::from_synthetic(const std::vector<imagecore::LabeledImage>& images, int num_classes) {
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) {
    names.push_back(std::string(imagecore::shape_name(imagecore::shape_for_class(c))) + "_" +
                    std::to_string(imagecore::color_family_for_class(c)));
  }
  std::vector<Sample> samples;
  samples.reserve(images.size());
  for (const auto& li : images) {
    if (li.class_id < 0 || li.class_id >= num_classes) throw std::invalid_argument("synthetic class id out of range");
    Sample s{li.image, imagecore::Grid<std::uint8_t>(li.image.width(), li.image.height())};
    for (std::size_t i = 0; i < s.labels.values.size(); ++i) {
      if (li.mask.get(i)) s.labels.values[i] = static_cast<std::uint8_t>(li.class_id + 1);
    }
    samples.push_back(std::move(s));
  }
  return SegDataset(std::move(samples), std::move(names));
}

namespace {

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.png", i);
  return buf;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SegDataset SegDataset::load(const fs::path& root) {
  const auto bytes = read_file_bytes(root / "classes.txt");
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty()) throw DataError((root / "classes.txt").string() + ": no classes listed");

  std::vector<Sample> samples;
  for (const auto& img_path : sorted_pngs(root / "images")) {
    const fs::path mask_path = root / "masks" / img_path.filename();
    if (!fs::exists(mask_path)) throw IoError(mask_path.string() + ": missing mask");
    Sample s;
    s.image = imagecore::read_png_rgb(img_path);
    try {
      s.labels = imagecore::decode_png_gray8(read_file_bytes(mask_path));
    } catch (const IoError& e) {
      throw IoError(mask_path.string() + ": " + e.what());
    }
    if (s.labels.width != s.image.width() || s.labels.height != s.image.height()) {
      throw DataError(mask_path.string() + ": mask size differs from the image");
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError((root / "images").string() + ": no images");
  return SegDataset(std::move(samples), std::move(names));
}

void SegDataset::save(const fs::path& root) const {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    imagecore::write_png(root / "images" / sample_name(i), samples_[i].image);
    imagecore::write_png(root / "masks" / sample_name(i), samples_[i].labels);
  }
  std::string text;
  for (const auto& n : class_names_) text += n + "\n";
  write_file_atomic(root / "classes.txt", text);
}

const std::vector<std::size_t>& SegDataset::images_of(int class_id) const {
  if (class_id < 0 || class_id >= num_classes()) throw std::invalid_argument("class id out of range");
  return by_class_[static_cast<std::size_t>(class_id)];
}

std::vector<imagecore::RgbImage> SegDataset::images() const {
  std::vector<imagecore::RgbImage> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.image);
  return out;
}

}  // namespace fsprior::fewshot
