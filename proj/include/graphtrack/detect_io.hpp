#pragma once

// Detection records, stream I/O (JSONL and MOT-style CSV), and the
// pre-graph filters: confidence gate, NMS, ROI gating, box-size clamp.
// All coordinates are normalized to [0,1]; pixel conversion happens only
// through ImageSize.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graphtrack {

struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  bool valid() const;
  bool operator==(const BBox&) const = default;
};

struct Detection {
  BBox box;
  double confidence = 1.0;
  int class_id = 0;
  std::string class_name;
  std::optional<std::vector<double>> embedding;
  // Object or track identity. Ignored when a stream is ingested for tracking;
  // carried by ground-truth and tracker-output files.
  std::optional<std::int64_t> id;

  bool operator==(const Detection&) const = default;
};

struct FrameDetections {
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;

  bool operator==(const FrameDetections&) const = default;
};

/// Closed axis-aligned rectangle in normalized coordinates.
struct Roi {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  static Roi full() { return {}; }
  bool valid() const;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool operator==(const Roi&) const = default;
};

struct ImageSize {
  int width = 1920;
  int height = 1080;

  bool operator==(const ImageSize&) const = default;
};

enum class StreamFormat { Jsonl, MotCsv };

StreamFormat parse_format(std::string_view tag);
std::string_view format_name(StreamFormat f);

/// Pixel box anchored at its top-left corner.
struct PixelBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;
};

PixelBox to_pixels(const BBox& b, const ImageSize& img);
BBox from_pixels(const PixelBox& p, const ImageSize& img);

/// Parses a whole stream. Frames come back in ascending order with gaps
/// between the first and last frame filled by empty FrameDetections.
/// Throws ParseError naming the line and field on malformed input.
std::vector<FrameDetections> parse_stream(std::string_view bytes, StreamFormat format);

/// Parses one JSONL frame line. `line_no` is only used in error messages.
FrameDetections parse_jsonl_line(std::string_view line, std::size_t line_no);

/// The MOT format needs the image size to denormalize; it is written as the header.
std::string serialize_stream(std::span<const FrameDetections> frames, StreamFormat format,
                             const ImageSize& img = {});
std::string serialize_jsonl_frame(const FrameDetections& frame);

/// Reads the `#img_w,img_h` header of a MOT CSV stream, if present.
std::optional<ImageSize> mot_image_size(std::string_view bytes);

double iou(const BBox& a, const BBox& b);

/// Greedy class-wise NMS. Ties in confidence keep lower input index first.
/// Output is sorted by confidence, descending.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold);

/// Input indices of the detections `nms` keeps, in the same order.
std::vector<std::size_t> nms_indices(std::span<const Detection> dets, double iou_threshold);

FrameDetections apply_roi(const FrameDetections& frame, const Roi& roi);

/// Drops detections with confidence below `threshold`; order preserved.
FrameDetections confidence_gate(const FrameDetections& frame, double threshold);

/// Clamps w and h to at most `max_size`.
FrameDetections clamp_box_size(const FrameDetections& frame, double max_size);

}  // namespace graphtrack
