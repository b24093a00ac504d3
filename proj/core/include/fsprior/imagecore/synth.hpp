#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fsprior/imagecore/image.hpp"

namespace fsprior::imagecore {

/// An image with a single annotated object and its class id.
struct LabeledImage {
  RgbImage image;
  BinaryMask mask;
  int class_id = 0;

  bool operator==(const LabeledImage&) const = default;
};

enum class ShapeKind { Disk, Square, Triangle, Ring, Cross, Bar, Blob, AnnulusSector };
inline constexpr int kShapeKinds = 8;
inline constexpr int kColorFamilies = 4;

std::string_view shape_name(ShapeKind kind);

/// Shape rendered for a class: class c draws shape c mod 8.
ShapeKind shape_for_class(int class_id);

/// Colour family for a class. Families are shared by several classes, so the
/// colour alone never identifies the class.
int color_family_for_class(int class_id);

/// Renders `n` images of `size` x `size` pixels, each with one foreground
/// shape on a textured background. The mask marks exactly the pixels painted
/// by the shape. Sample i depends only on (seed, i).
std::vector<LabeledImage> synth_dataset(int n, int classes, int size, std::uint64_t seed);

}  // namespace fsprior::imagecore
