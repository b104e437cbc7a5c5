#pragma once

#include <cmath>
#include <cstddef>

#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"

namespace vlfuse {

struct BinnedEvents {
    EventTensor tensor;
    std::size_t dropped_out_of_bounds = 0;  // in-window events with pixels outside (h, w)
};

/// Bins events into T temporal slices over [window_start, window_start + window_len).
/// Positive polarity fills channel 0, negative channel 1; cells hold counts.
inline BinnedEvents bin_events(const std::vector<Event>& events, double window_start,
                               double window_len, int slices, int height, int width) {
    if (slices < 1 || height < 1 || width < 1 || !(window_len > 0.0))
        throw ConfigError("bin_events: slices, height, width must be >= 1 and window_len > 0");
    BinnedEvents out;
    EventTensor& t = out.tensor;
    t.slices = slices;
    t.height = height;
    t.width = width;
    t.window_start = window_start;
    t.window_len = window_len;
    t.values.assign(static_cast<std::size_t>(2) * slices * height * width, 0);
    for (const Event& e : events) {
        if (e.t < window_start || e.t >= window_start + window_len) continue;
        if (e.x >= width || e.y >= height) {
            ++out.dropped_out_of_bounds;
            continue;
        }
        int slice = static_cast<int>(std::floor((e.t - window_start) / window_len * slices));
        if (slice >= slices) slice = slices - 1;  // guards float roundoff at the window edge
        const int polarity = e.p > 0 ? 0 : 1;
        ++t.at(polarity, slice, e.y, e.x);
    }
    return out;
}

/// Crops or zero-pads the spatial dimensions to (target_h, target_w).
/// Padding is symmetric with the extra cell at the high end; cropping is
/// centered with the same offset convention, so a pad followed by the
/// inverse crop restores the original tensor exactly.
inline EventTensor fit_tensor(const EventTensor& in, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1)
        throw ConfigError("fit_tensor: target dimensions must be >= 1");
    EventTensor out;
    out.slices = in.slices;
    out.height = target_h;
    out.width = target_w;
    out.window_start = in.window_start;
    out.window_len = in.window_len;
    out.values.assign(static_cast<std::size_t>(2) * in.slices * target_h * target_w, 0);

    // Source cell (y, x) lands at (y + off_y, x + off_x); offsets are the
    // low-end pad (positive) or crop (negative) amounts.
    const int off_y = (target_h - in.height) / 2;
    const int off_x = (target_w - in.width) / 2;
    for (int p = 0; p < 2; ++p) {
        for (int s = 0; s < in.slices; ++s) {
            for (int y = 0; y < in.height; ++y) {
                const int oy = y + off_y;
                if (oy < 0 || oy >= target_h) continue;
                for (int x = 0; x < in.width; ++x) {
                    const int ox = x + off_x;
                    if (ox < 0 || ox >= target_w) continue;
                    out.at(p, s, oy, ox) = in.at(p, s, y, x);
                }
            }
        }
    }
    return out;
}

}  // namespace vlfuse
