#pragma once

#include "cathseg/image.hpp"

namespace cathseg {

/// 1 where map >= alpha. Requires 0 < alpha < 1.
BinaryMask threshold(const ProbabilityMap& map, double alpha);

/// Zhang-Suen two-subiteration thinning. Pixels outside the image count as
/// background. A component that the sub-passes would erase entirely keeps
/// the pixel removed last (first in scan order on ties).
BinaryMask skeletonize(const BinaryMask& mask);

/// Zhang-Suen leaves 2x2 blocks where strokes cross. Removes one pixel per
/// block, preferring one whose neighbors stay 8-connected without it.
BinaryMask thin_square_blocks(const BinaryMask& skeleton);

/// True when some 2x2 window is entirely ones.
bool has_square_block(const BinaryMask& mask);

}  // namespace cathseg
