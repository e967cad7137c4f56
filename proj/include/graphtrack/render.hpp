#pragma once

// Offline overlays: one SVG document per frame with boxes colored by track id.

#include <cstdint>
#include <optional>
#include <string>

#include "graphtrack/detect_io.hpp"

namespace graphtrack {

/// "#rrggbb", a pure function of the id; detections without an id are grey.
std::string track_color(std::optional<std::int64_t> track_id);

/// Boxes, "id label conf" text, the frame index and an FPS footer
/// ("FPS: n/a" when no measurement is supplied).
std::string render_svg(const FrameDetections& frame, const ImageSize& img, std::optional<double> fps = std::nullopt);

/// frame_000042.svg
std::string frame_file_name(std::int64_t frame_index);

}  // namespace graphtrack
