#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsprior/imagecore/image.hpp"
#include "fsprior/imagecore/synth.hpp"

namespace fsprior::fewshot {

/// Image with a per-pixel label map: 0 is background, c + 1 marks class c.
struct Sample {
  imagecore::RgbImage image;
  imagecore::Grid<std::uint8_t> labels;

  bool contains(int class_id) const;
  imagecore::BinaryMask mask_for(int class_id) const;
  bool operator==(const Sample&) const = default;
};

/// Labeled segmentation dataset. On disk:
///   <root>/classes.txt        one class name per line, line i is class i
///   <root>/images/NNNNNN.png  RGB
///   <root>/masks/NNNNNN.png   8-bit label map, same size as the image
/// Samples are read in file-name order.
class SegDataset {
 public:
  SegDataset() = default;
  SegDataset(std::vector<Sample> samples, std::vector<std::string> class_names);

  /// One class per synthetic image, named after its shape and colour family.
  static SegDataset from_synthetic(const std::vector<imagecore::LabeledImage>& images, int num_classes);

  static SegDataset load(const std::filesystem::path& root);
  void save(const std::filesystem::path& root) const;

  std::size_t size() const { return samples_.size(); }
  int num_classes() const { return static_cast<int>(class_names_.size()); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  /// Indices of the samples containing class c, ascending.
  const std::vector<std::size_t>& images_of(int class_id) const;

  std::vector<imagecore::RgbImage> images() const;

 private:
  std::vector<Sample> samples_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::size_t>> by_class_;
};

}  // namespace fsprior::fewshot
