#pragma once

#include "coseg/flow.hpp"
#include "coseg/image.hpp"

#include <vector>

namespace coseg {

/// Temporally consistent superpixels: one label image per frame, labels shared
/// across the video.  A label present in frames t and t+1 denotes the same
/// tracked region.
struct SuperpixelMap {
  std::vector<Imagei> labels;  // per frame; every pixel labeled, 4-connected regions
  int labelCount = 0;          // distinct labels over the whole video

  int frameCount() const { return static_cast<int>(labels.size()); }
};

struct TcsOptions {
  double compactness = 10.0;  // SLIC spatial weight
  int slicIters = 10;
  double colorGate = 20.0;  // max Lab distance for a label to persist
};

/// SLIC-style segmentation of one Lab frame into ~targetCount 4-connected
/// superpixels with dense labels starting at 0.
Imagei slicSegment(const LabImage& lab, int targetCount, const TcsOptions& opts = {});

/// Per-frame superpixels linked over time along the flow: a superpixel in
/// frame t+1 inherits the label of the frame-t superpixel that the flow maps
/// onto it with greatest overlap, if their mean colors are within the gate;
/// otherwise it gets a fresh label.  flows must hold exactly frameCount-1
/// fields (frame t -> t+1).
SuperpixelMap computeTcs(const Video& video, const std::vector<FlowField>& flows, int targetCount,
                         const TcsOptions& opts = {});

/// Labels whose frame-f region lies inside the mask by at least half of the
/// superpixel's area. Sorted ascending.
std::vector<int> labelsOfMask(const SuperpixelMap& spm, int frame, const Mask& mask);

/// Union of the given labels' pixel sets in frame f. Labels absent from the
/// frame contribute nothing.
Mask maskOfLabels(const SuperpixelMap& spm, int frame, const std::vector<int>& labels);

}  // namespace coseg
