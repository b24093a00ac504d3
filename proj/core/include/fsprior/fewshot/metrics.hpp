#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "fsprior/imagecore/image.hpp"

namespace fsprior::fewshot {

/// Foreground pixel counts of one prediction against one ground truth.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  /// Counts with foreground and background swapped.
  ConfusionCounts complement() const { return {tn, fn, fp, tp}; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws std::invalid_argument when the masks differ in size.
ConfusionCounts confusion(const imagecore::BinaryMask& pred, const imagecore::BinaryMask& gt);

/// TP / (TP + FP + FN); 1 when the union is empty.
double iou(const ConfusionCounts& c);
double iou(const imagecore::BinaryMask& pred, const imagecore::BinaryMask& gt);

/// Mean of per-class IoUs (0 for an empty list).
double miou(std::span<const double> per_class);

/// (IoU_fg + IoU_bg) / 2.
double fbiou(const ConfusionCounts& c);
double fbiou(const imagecore::BinaryMask& pred, const imagecore::BinaryMask& gt);

/// |R & GT| / |GT|. Throws std::invalid_argument for an empty ground truth
/// or a size mismatch.
double region_recall(const imagecore::BinaryMask& region, const imagecore::BinaryMask& gt);

/// Accumulates counts per class over many episodes: class IoU comes from the
/// summed counts of that class, mIoU is the mean over classes seen, FBIoU
/// uses the counts summed over every episode.
class MetricAccumulator {
 public:
  void add(int class_id, const ConfusionCounts& c);

  const std::map<int, ConfusionCounts>& per_class() const { return per_class_; }
  std::map<int, double> class_iou() const;
  double miou() const;
  double fbiou() const;
  std::size_t episodes() const { return episodes_; }

 private:
  std::map<int, ConfusionCounts> per_class_;
  ConfusionCounts all_;
  std::size_t episodes_ = 0;
};

}  // namespace fsprior::fewshot
