#include "fsprior/fewshot/metrics.hpp"

#include <stdexcept>

namespace fsprior::fewshot {

using imagecore::BinaryMask;

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw std::invalid_argument("confusion: mask sizes differ");
  }
  ConfusionCounts c;
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pi = p[i] != 0, gi = g[i] != 0;
    if (pi && gi) ++c.tp;
    else if (pi) ++c.fp;
    else if (gi) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double iou(const ConfusionCounts& c) {
  const std::uint64_t uni = c.tp + c.fp + c.fn;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return iou(confusion(pred, gt)); }

double miou(std::span<const double> per_class) {
  if (per_class.empty()) return 0.0;
  double s = 0.0;
  for (double v : per_class) s += v;
  return s / static_cast<double>(per_class.size());
}

double fbiou(const ConfusionCounts& c) { return 0.5 * (iou(c) + iou(c.complement())); }

double fbiou(const BinaryMask& pred, const BinaryMask& gt) { return fbiou(confusion(pred, gt)); }

double region_recall(const BinaryMask& region, const BinaryMask& gt) {
  const ConfusionCounts c = confusion(region, gt);
  const std::uint64_t positives = c.tp + c.fn;
  if (positives == 0) throw std::invalid_argument("region_recall: empty ground truth");
  return static_cast<double>(c.tp) / static_cast<double>(positives);
}

void MetricAccumulator::add(int class_id, const ConfusionCounts& c) {
  per_class_[class_id] += c;
  all_ += c;
  ++episodes_;
}

std::map<int, double> MetricAccumulator::class_iou() const {
  std::map<int, double> out;
  for (const auto& [cls, c] : per_class_) out[cls] = iou(c);
  return out;
}

double MetricAccumulator::miou() const {
  std::vector<double> v;
  for (const auto& [cls, c] : per_class_) v.push_back(iou(c));
  return fewshot::miou(v);
}

double MetricAccumulator::fbiou() const { return episodes_ == 0 ? 0.0 : fewshot::fbiou(all_); }

}  // namespace fsprior::fewshot
