// keyboard_region.hpp -- static keyboard bounding box selection and cropping.
//
// Detection candidates come from an external detector via a text file; the box
// is assumed static within a video, so one box is selected per video and
// reused for every frame.
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "vpt/image.hpp"
#include "vpt/util.hpp"

namespace vpt {

struct BoundingBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive-exclusive pixel rect
    double confidence = 0.0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool valid() const { return x0 < x1 && y0 < y1 && confidence >= 0.0 && confidence <= 1.0; }
};

// Per-frame candidate lists for the first K frames of a video.
struct DetectionSet {
    std::vector<std::vector<BoundingBox>> per_frame;
};

// Text lines `frame_index x0 y0 x1 y1 confidence`. Coordinates may be decimal
// (detector output); they are rounded to integer pixels. Candidates at frame
// indices >= first_k are ignored.
inline DetectionSet load_detections(const std::filesystem::path& path, int first_k = 30) {
    if (first_k < 1) fail("detection window K must be >= 1");
    std::ifstream in(path);
    if (!in) fail("cannot open detection file: ", path.string());

    DetectionSet set;
    set.per_frame.resize(static_cast<std::size_t>(first_k));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long frame;
        double x0, y0, x1, y1, conf;
        if (!(ls >> frame >> x0 >> y0 >> x1 >> y1 >> conf))
            fail("malformed detection line ", lineno, ": ", line);
        if (frame < 0) fail("negative frame index at detection line ", lineno);
        if (frame >= first_k) continue;
        BoundingBox box;
        box.x0 = static_cast<int>(std::lround(x0));
        box.y0 = static_cast<int>(std::lround(y0));
        box.x1 = static_cast<int>(std::lround(x1));
        box.y1 = static_cast<int>(std::lround(y1));
        box.confidence = conf;
        if (box.x0 >= box.x1 || box.y0 >= box.y1)
            fail("degenerate box at detection line ", lineno);
        if (conf < 0.0 || conf > 1.0)
            fail("confidence outside [0,1] at detection line ", lineno);
        set.per_frame[static_cast<std::size_t>(frame)].push_back(box);
    }
    return set;
}

// The candidate with maximum confidence across all frames. Ties break by
// earliest frame, then smallest x0 (then y0, x1, y1 for full determinism).
inline BoundingBox select_box(const DetectionSet& detections) {
    const BoundingBox* best = nullptr;
    std::size_t best_frame = 0;
    auto better = [&](const BoundingBox& box, std::size_t frame) {
        if (!best) return true;
        if (box.confidence != best->confidence) return box.confidence > best->confidence;
        if (frame != best_frame) return frame < best_frame;
        return std::tuple(box.x0, box.y0, box.x1, box.y1) <
               std::tuple(best->x0, best->y0, best->x1, best->y1);
    };
    for (std::size_t f = 0; f < detections.per_frame.size(); ++f) {
        for (const auto& box : detections.per_frame[f]) {
            if (better(box, f)) {
                best = &box;
                best_frame = f;
            }
        }
    }
    if (!best) fail("no keyboard detected");
    return *best;
}

// Same box applied to every frame of a video. A box that exceeds the frame is
// clamped when at least 90% of its area overlaps the frame, otherwise it is an
// error. `clamped` (optional) reports whether clamping occurred.
template <class Img>
Img crop_frame(const Img& frame, const BoundingBox& box, bool* clamped = nullptr) {
    if (clamped) *clamped = false;
    if (!box.valid()) fail("invalid bounding box");
    int cx0 = std::max(box.x0, 0);
    int cy0 = std::max(box.y0, 0);
    int cx1 = std::min(box.x1, frame.w);
    int cy1 = std::min(box.y1, frame.h);
    if (cx0 != box.x0 || cy0 != box.y0 || cx1 != box.x1 || cy1 != box.y1) {
        double box_area = static_cast<double>(box.width()) * box.height();
        double overlap = 0.0;
        if (cx0 < cx1 && cy0 < cy1)
            overlap = static_cast<double>(cx1 - cx0) * (cy1 - cy0);
        if (overlap / box_area < 0.9)
            fail("bounding box overlaps frame by ", overlap / box_area * 100.0,
                 "% (< 90%), refusing to crop");
        if (clamped) *clamped = true;
    }
    return crop_image(frame, cx0, cy0, cx1, cy1);
}

}  // namespace vpt
