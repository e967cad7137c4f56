#include "graphtrack/render.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "graphtrack/rng.hpp"

namespace graphtrack {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string track_color(std::optional<std::int64_t> track_id) {
  if (!track_id) return "#9e9e9e";
  SplitMix64 mix(static_cast<std::uint64_t>(*track_id));
  const double hue = static_cast<double>(mix.next() >> 11) * 0x1.0p-53 * 360.0;
  // HSV -> RGB with fixed saturation/value so every color reads on both light and dark frames.
  const double s = 0.75, v = 0.9;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0));
  const double m = v - c;
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hue / 60.0) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround((rgb[0] + m) * 255.0)),
                static_cast<int>(std::lround((rgb[1] + m) * 255.0)), static_cast<int>(std::lround((rgb[2] + m) * 255.0)));
  return buf;
}

std::string render_svg(const FrameDetections& frame, const ImageSize& img, std::optional<double> fps) {
  const auto w = std::to_string(img.width);
  const auto h = std::to_string(img.height);
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w +
         " " + h + "\">\n";
  out += "<g id=\"background\"><path d=\"M0 0H" + w + "V" + h + "H0Z\" fill=\"#202020\"/></g>\n";
  for (const auto& d : frame.detections) {
    const auto p = to_pixels(d.box, img);
    const auto color = track_color(d.id);
    out += "<rect x=\"" + fixed(p.left, 1) + "\" y=\"" + fixed(p.top, 1) + "\" width=\"" + fixed(p.width, 1) + "\" height=\"" +
           fixed(p.height, 1) + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    std::string label = d.id ? "#" + std::to_string(*d.id) : "-";
    label += " " + (d.class_name.empty() ? "class " + std::to_string(d.class_id) : d.class_name);
    label += " " + fixed(d.confidence, 2);
    out += "<text x=\"" + fixed(p.left, 1) + "\" y=\"" + fixed(std::max(p.top - 4.0, 12.0), 1) +
           "\" fill=\"" + color + "\" font-family=\"monospace\" font-size=\"14\">" + escape(label) + "</text>\n";
  }
  out += "<text x=\"10\" y=\"24\" fill=\"#ffffff\" font-family=\"monospace\" font-size=\"18\">frame " +
         std::to_string(frame.frame_index) + "</text>\n";
  out += "<text x=\"10\" y=\"" + std::to_string(img.height - 10) +
         "\" fill=\"#ffffff\" font-family=\"monospace\" font-size=\"18\">FPS: " + (fps ? fixed(*fps, 1) : "n/a") +
         "</text>\n";
  out += "</svg>\n";
  return out;
}

std::string frame_file_name(std::int64_t frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.svg", static_cast<long long>(frame_index));
  return buf;
}

}  // namespace graphtrack
