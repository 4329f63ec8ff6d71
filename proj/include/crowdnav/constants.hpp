#pragma once

namespace crowdnav {

// Angular resolution of scans and direction vectors. One beam / direction
// bin per degree. Changing this constant rescales every derived dimension
// (target encoding, state matrix, network output).
inline constexpr int kBeams = 360;

// One-hot direction plus a scalar distance.
inline constexpr int kTargetDim = kBeams + 1;

// Two consecutive scans stacked with the target encoding: rows of the
// network input matrix.
inline constexpr int kStateRows = kBeams + kTargetDim;

}  // namespace crowdnav
