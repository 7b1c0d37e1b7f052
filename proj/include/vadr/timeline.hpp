// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vadr/types.hpp"

namespace vadr {

struct Frame {
  std::string token;  // opaque frame reference
  double timestamp;   // normalized time in [0, 1]
  bool operator==(const Frame&) const = default;
};

/// Ordered frames with strictly increasing normalized timestamps.
class VideoTimeline {
 public:
  /// Throws PreconditionError on an empty list, out-of-range or
  /// non-increasing timestamps.
  explicit VideoTimeline(std::vector<Frame> frames);

  /// Frames at i / (n - 1); a single frame sits at 0.
  static VideoTimeline uniform(const std::vector<std::string>& tokens);

  const std::vector<Frame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }

  /// FNV-1a over tokens and 6-decimal timestamps, as 16 hex digits.
  std::string fingerprint() const;

  bool operator==(const VideoTimeline&) const = default;

 private:
  std::vector<Frame> frames_;
};

enum class Boundary { Head, Tail };

/// Drops frames whose timestamp lies in the closed interval, then maps the
/// survivors affinely onto [0, 1]. Throws EmptyTimeline if nothing survives.
VideoTimeline excise_interval(const VideoTimeline& t, const TemporalInterval& iv);

/// Head drops timestamps < fraction; Tail drops timestamps > 1 - fraction.
/// Requires 0 < fraction < 0.5 (PreconditionError) and a non-empty result
/// (EmptyTimeline).
VideoTimeline excise_boundary(const VideoTimeline& t, Boundary side, double fraction);

}  // namespace vadr
