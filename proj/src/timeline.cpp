// SPDX-License-Identifier: Apache-2.0

#include "vadr/timeline.hpp"

#include <cmath>
#include <cstdio>

#include "vadr/error.hpp"
#include "vadr/text.hpp"

namespace vadr {

namespace {

VideoTimeline renormalized(std::vector<Frame> kept) {
  if (kept.empty()) throw EmptyTimeline();
  if (kept.size() == 1) {
    kept.front().timestamp = 0.0;
  } else {
    const double lo = kept.front().timestamp;
    const double span = kept.back().timestamp - lo;
    for (auto& f : kept) f.timestamp = (f.timestamp - lo) / span;
    kept.back().timestamp = 1.0;
  }
  return VideoTimeline(std::move(kept));
}

}  // namespace

VideoTimeline::VideoTimeline(std::vector<Frame> frames) : frames_(std::move(frames)) {
  if (frames_.empty()) throw PreconditionError("timeline needs at least one frame");
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    const double t = frames_[i].timestamp;
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) throw PreconditionError("timestamp outside [0, 1]");
    if (i > 0 && !(t > frames_[i - 1].timestamp)) {
      throw PreconditionError("timestamps must strictly increase");
    }
  }
}

VideoTimeline VideoTimeline::uniform(const std::vector<std::string>& tokens) {
  std::vector<Frame> frames;
  frames.reserve(tokens.size());
  const double denom = tokens.size() > 1 ? static_cast<double>(tokens.size() - 1) : 1.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    frames.push_back({tokens[i], static_cast<double>(i) / denom});
  }
  return VideoTimeline(std::move(frames));
}

std::string VideoTimeline::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& f : frames_) {
    mix(f.token);
    mix("\x1f");
    mix(text::fixed6(f.timestamp));
    mix("\x1e");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

VideoTimeline excise_interval(const VideoTimeline& t, const TemporalInterval& iv) {
  std::vector<Frame> kept;
  for (const auto& f : t.frames()) {
    if (!iv.contains(f.timestamp)) kept.push_back(f);
  }
  return renormalized(std::move(kept));
}

VideoTimeline excise_boundary(const VideoTimeline& t, Boundary side, double fraction) {
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw PreconditionError("boundary fraction must lie in (0, 0.5)");
  }
  std::vector<Frame> kept;
  for (const auto& f : t.frames()) {
    const bool drop = side == Boundary::Head ? f.timestamp < fraction : f.timestamp > 1.0 - fraction;
    if (!drop) kept.push_back(f);
  }
  return renormalized(std::move(kept));
}

}  // namespace vadr
