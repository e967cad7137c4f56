#include "graphtrack/detect_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "graphtrack/errors.hpp"
#include "text_util.hpp"

namespace graphtrack {

using json = nlohmann::ordered_json;

bool BBox::valid() const {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0 && cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0;
}

bool Roi::valid() const {
  return x0 >= 0.0 && y0 >= 0.0 && x1 <= 1.0 && y1 <= 1.0 && x1 > x0 && y1 > y0;
}

StreamFormat parse_format(std::string_view tag) {
  if (tag == "jsonl") return StreamFormat::Jsonl;
  if (tag == "mot" || tag == "mot-csv" || tag == "csv") return StreamFormat::MotCsv;
  throw ConfigError("unknown stream format '" + std::string(tag) + "' (expected jsonl or mot)");
}

std::string_view format_name(StreamFormat f) {
  return f == StreamFormat::Jsonl ? "jsonl" : "mot";
}

PixelBox to_pixels(const BBox& b, const ImageSize& img) {
  const double W = img.width;
  const double H = img.height;
  return {b.left() * W, b.top() * H, b.w * W, b.h * H};
}

BBox from_pixels(const PixelBox& p, const ImageSize& img) {
  const double W = img.width;
  const double H = img.height;
  return {(p.left + 0.5 * p.width) / W, (p.top + 0.5 * p.height) / H, p.width / W, p.height / H};
}

namespace {

class EmbeddingDimCheck {
public:
  void check(const Detection& d, std::size_t line) {
    if (!d.embedding) return;
    if (!dim_) {
      dim_ = d.embedding->size();
    } else if (*dim_ != d.embedding->size()) {
      throw ParseError(line, "emb",
                       "embedding dimension " + std::to_string(d.embedding->size()) +
                           " differs from stream dimension " + std::to_string(*dim_));
    }
  }

private:
  std::optional<std::size_t> dim_;
};

double require_number(const json& j, std::size_t line, const char* field) {
  if (!j.is_number()) throw ParseError(line, field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(line, field, "value is not finite");
  return v;
}

std::int64_t require_integer(const json& j, std::size_t line, const char* field) {
  if (!j.is_number_integer()) throw ParseError(line, field, "expected an integer");
  return j.get<std::int64_t>();
}

Detection parse_json_detection(const json& jd, std::size_t line) {
  if (!jd.is_object()) throw ParseError(line, "detections", "each detection must be an object");
  Detection d;

  const auto box_it = jd.find("box");
  if (box_it == jd.end()) throw ParseError(line, "box", "missing");
  if (!box_it->is_array() || box_it->size() != 4)
    throw ParseError(line, "box", "expected [cx, cy, w, h]");
  d.box = {require_number((*box_it)[0], line, "box"), require_number((*box_it)[1], line, "box"),
           require_number((*box_it)[2], line, "box"), require_number((*box_it)[3], line, "box")};
  if (!d.box.valid())
    throw ParseError(line, "box", "requires 0<=cx,cy<=1 and w,h>0");

  const auto conf_it = jd.find("conf");
  if (conf_it == jd.end()) throw ParseError(line, "conf", "missing");
  d.confidence = require_number(*conf_it, line, "conf");
  if (d.confidence < 0.0 || d.confidence > 1.0)
    throw ParseError(line, "conf", "confidence outside [0,1]");

  const auto cls_it = jd.find("class");
  if (cls_it == jd.end()) throw ParseError(line, "class", "missing");
  const auto cls = require_integer(*cls_it, line, "class");
  if (cls < 0) throw ParseError(line, "class", "class id must be non-negative");
  d.class_id = static_cast<int>(cls);

  if (const auto it = jd.find("label"); it != jd.end()) {
    if (!it->is_string()) throw ParseError(line, "label", "expected a string");
    d.class_name = it->get<std::string>();
  }
  if (const auto it = jd.find("emb"); it != jd.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(line, "emb", "expected an array of numbers");
    std::vector<double> e;
    e.reserve(it->size());
    for (const auto& v : *it) e.push_back(require_number(v, line, "emb"));
    d.embedding = std::move(e);
  }
  if (const auto it = jd.find("id"); it != jd.end() && !it->is_null()) {
    d.id = require_integer(*it, line, "id");
  }
  return d;
}

json detection_to_json(const Detection& d) {
  json jd;
  jd["box"] = {d.box.cx, d.box.cy, d.box.w, d.box.h};
  jd["conf"] = d.confidence;
  jd["class"] = d.class_id;
  jd["label"] = d.class_name;
  if (d.embedding) jd["emb"] = *d.embedding;
  if (d.id) jd["id"] = *d.id;
  return jd;
}

std::vector<FrameDetections> fill_gaps(std::map<std::int64_t, FrameDetections>&& by_frame) {
  std::vector<FrameDetections> out;
  if (by_frame.empty()) return out;
  const auto first = by_frame.begin()->first;
  const auto last = by_frame.rbegin()->first;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (auto t = first; t <= last; ++t) {
    auto it = by_frame.find(t);
    if (it != by_frame.end()) {
      out.push_back(std::move(it->second));
    } else {
      out.push_back(FrameDetections{t, {}});
    }
  }
  return out;
}

std::vector<FrameDetections> parse_jsonl(std::string_view bytes) {
  std::map<std::int64_t, FrameDetections> by_frame;
  EmbeddingDimCheck dims;
  std::optional<std::int64_t> last_frame;
  std::size_t line_no = 0;
  for (const auto raw : detail::split_lines(bytes)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    auto frame = parse_jsonl_line(line, line_no);
    for (const auto& d : frame.detections) dims.check(d, line_no);
    if (last_frame && frame.frame_index <= *last_frame)
      throw ParseError(line_no, "frame", "frame indices must strictly increase");
    last_frame = frame.frame_index;
    by_frame.emplace(frame.frame_index, std::move(frame));
  }
  return fill_gaps(std::move(by_frame));
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cols.push_back(detail::trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cols;
}

template <typename T>
T parse_csv_value(std::string_view s, std::size_t line, const char* field) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) throw ParseError(line, field, "cannot parse '" + std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ParseError(line, field, "value is not finite");
  }
  return v;
}

ImageSize parse_mot_header(std::string_view line, std::size_t line_no) {
  if (line.empty() || line.front() != '#')
    throw ParseError(line_no, "header", "expected '#img_w,img_h'");
  const auto cols = split_csv(line.substr(1));
  if (cols.size() != 2) throw ParseError(line_no, "header", "expected '#img_w,img_h'");
  ImageSize img{parse_csv_value<int>(cols[0], line_no, "img_w"),
                parse_csv_value<int>(cols[1], line_no, "img_h")};
  if (img.width <= 0 || img.height <= 0) throw ParseError(line_no, "header", "image size must be positive");
  return img;
}

std::vector<FrameDetections> parse_mot(std::string_view bytes) {
  std::map<std::int64_t, FrameDetections> by_frame;
  std::optional<ImageSize> img;
  std::size_t line_no = 0;
  for (const auto raw : detail::split_lines(bytes)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!img) {
      img = parse_mot_header(line, line_no);
      continue;
    }
    const auto cols = split_csv(line);
    if (cols.size() < 8) throw ParseError(line_no, "columns", "expected at least 8 comma-separated columns");
    const auto frame = parse_csv_value<std::int64_t>(cols[0], line_no, "frame");
    if (frame < 0) throw ParseError(line_no, "frame", "frame index must be non-negative");
    const auto id = parse_csv_value<std::int64_t>(cols[1], line_no, "id");
    PixelBox p{parse_csv_value<double>(cols[2], line_no, "left"), parse_csv_value<double>(cols[3], line_no, "top"),
               parse_csv_value<double>(cols[4], line_no, "width"),
               parse_csv_value<double>(cols[5], line_no, "height")};
    Detection d;
    d.box = from_pixels(p, *img);
    if (!d.box.valid()) throw ParseError(line_no, "box", "box center outside image or non-positive size");
    d.confidence = parse_csv_value<double>(cols[6], line_no, "conf");
    if (d.confidence < 0.0 || d.confidence > 1.0) throw ParseError(line_no, "conf", "confidence outside [0,1]");
    const auto cls = parse_csv_value<int>(cols[7], line_no, "class");
    if (cls < 0) throw ParseError(line_no, "class", "class id must be non-negative");
    d.class_id = cls;
    if (id >= 0) d.id = id;
    auto& fd = by_frame[frame];
    fd.frame_index = frame;
    fd.detections.push_back(std::move(d));
  }
  return fill_gaps(std::move(by_frame));
}

}  // namespace

FrameDetections parse_jsonl_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "", "expected a JSON object");
  FrameDetections fd;
  const auto frame_it = j.find("frame");
  if (frame_it == j.end()) throw ParseError(line_no, "frame", "missing");
  fd.frame_index = require_integer(*frame_it, line_no, "frame");
  if (fd.frame_index < 0) throw ParseError(line_no, "frame", "frame index must be non-negative");
  const auto dets_it = j.find("detections");
  if (dets_it == j.end()) throw ParseError(line_no, "detections", "missing");
  if (!dets_it->is_array()) throw ParseError(line_no, "detections", "expected an array");
  EmbeddingDimCheck dims;
  for (const auto& jd : *dets_it) {
    fd.detections.push_back(parse_json_detection(jd, line_no));
    dims.check(fd.detections.back(), line_no);
  }
  return fd;
}

std::vector<FrameDetections> parse_stream(std::string_view bytes, StreamFormat format) {
  return format == StreamFormat::Jsonl ? parse_jsonl(bytes) : parse_mot(bytes);
}

std::optional<ImageSize> mot_image_size(std::string_view bytes) {
  std::size_t line_no = 0;
  for (const auto raw : detail::split_lines(bytes)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() != '#') return std::nullopt;
    return parse_mot_header(line, line_no);
  }
  return std::nullopt;
}

std::string serialize_jsonl_frame(const FrameDetections& frame) {
  json j;
  j["frame"] = frame.frame_index;
  j["detections"] = json::array();
  for (const auto& d : frame.detections) j["detections"].push_back(detection_to_json(d));
  return j.dump();
}

std::string serialize_stream(std::span<const FrameDetections> frames, StreamFormat format, const ImageSize& img) {
  std::string out;
  if (format == StreamFormat::Jsonl) {
    for (const auto& f : frames) {
      out += serialize_jsonl_frame(f);
      out += '\n';
    }
    return out;
  }
  out += '#' + std::to_string(img.width) + ',' + std::to_string(img.height) + '\n';
  for (const auto& f : frames) {
    for (const auto& d : f.detections) {
      const auto p = to_pixels(d.box, img);
      out += std::to_string(f.frame_index);
      out += ',';
      out += std::to_string(d.id.value_or(-1));
      for (const double v : {p.left, p.top, p.width, p.height, d.confidence}) {
        out += ',';
        out += detail::format_double(v);
      }
      out += ',';
      out += std::to_string(d.class_id);
      out += ",-1,-1\n";
    }
  }
  return out;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Areas from the same corners as the intersection so iou(a, a) is exactly 1.
  const double area_a = (a.right() - a.left()) * (a.bottom() - a.top());
  const double area_b = (b.right() - b.left()) * (b.bottom() - b.top());
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms_indices(std::span<const Detection> dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ConfigError("nms: iou_threshold must lie in (0,1]");
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });

  std::vector<std::size_t> kept;
  for (const auto i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return dets[k].class_id == dets[i].class_id && iou(dets[k].box, dets[i].box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  const auto kept = nms_indices(dets, iou_threshold);
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (const auto k : kept) out.push_back(dets[k]);
  return out;
}

FrameDetections apply_roi(const FrameDetections& frame, const Roi& roi) {
  FrameDetections out{frame.frame_index, {}};
  for (const auto& d : frame.detections) {
    if (roi.contains(d.box.cx, d.box.cy)) out.detections.push_back(d);
  }
  return out;
}

FrameDetections confidence_gate(const FrameDetections& frame, double threshold) {
  FrameDetections out{frame.frame_index, {}};
  for (const auto& d : frame.detections) {
    if (d.confidence >= threshold) out.detections.push_back(d);
  }
  return out;
}

FrameDetections clamp_box_size(const FrameDetections& frame, double max_size) {
  FrameDetections out = frame;
  for (auto& d : out.detections) {
    d.box.w = std::min(d.box.w, max_size);
    d.box.h = std::min(d.box.h, max_size);
  }
  return out;
}

}  // namespace graphtrack
