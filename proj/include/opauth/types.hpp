#pragma once

#include <string>
#include <vector>

namespace opauth {

using Vec = std::vector<double>;
// One observation sequence, frame-major: obs[t][k] is channel k at frame t.
using ObsSequence = std::vector<Vec>;

// A labeled slice of one trial, all frames carrying the same gesture id.
struct Segment {
    ObsSequence observations;
    std::string gesture_id;
    std::string operator_id;
    std::string trial_id;

    std::size_t length() const { return observations.size(); }
    std::size_t dim() const { return observations.empty() ? 0 : observations.front().size(); }
};

}  // namespace opauth
