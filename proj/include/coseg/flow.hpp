#pragma once

#include "coseg/image.hpp"

namespace coseg {

/// Dense per-pixel motion field, in pixels per frame.
struct FlowField {
  Imagef dx, dy;

  int width() const { return static_cast<int>(dx.cols()); }
  int height() const { return static_cast<int>(dx.rows()); }

  FlowField negated() const { return {-dx, -dy}; }
};

struct FlowOptions {
  int pyramidLevels = 3;
  int itersPerLevel = 100;
  float smoothness = 15.0f;  // Horn-Schunck alpha
};

/// Coarse-to-fine Horn-Schunck flow from frame a to frame b.
/// Deterministic for fixed inputs and options. Throws on dimension mismatch.
FlowField computeFlow(const Frame& a, const Frame& b, const FlowOptions& opts = {});

/// Per-frame flow list for a whole video: flows[t] maps frame t to t+1 for
/// t < T-1; flows[T-1] is the flow to the previous frame, negated.
std::vector<FlowField> computeVideoFlows(const Video& v, const FlowOptions& opts = {});

}  // namespace coseg
