#pragma once

#include <vector>

namespace choreo {

/// Final-frame left-to-right rank of every (sorted) dancer slot.
struct SwapMode {
    std::vector<int> order;

    static SwapMode identity(int dancers);

    int dancers() const { return static_cast<int>(order.size()); }
    /// Throws InvalidConfig unless order is a permutation of 0..C-1.
    void validate() const;
};

}  // namespace choreo
