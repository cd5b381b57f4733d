// Copyright 2026-present the gsq project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gsq::detail {

struct FiniteCell {
    std::uint32_t index;
    double distance;  // squared, in sigmoid space
};

inline double
sigmoid(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double
finite_grid_value(std::uint32_t index, std::uint32_t levels) noexcept {
    return static_cast<double>(index) / static_cast<double>(levels - 1);
}

/// Grid {0, 1/(L-1), ..., 1} in sigmoid space.
inline std::vector<double>
finite_grid(std::uint32_t levels) {
    std::vector<double> grid(levels);
    for (std::uint32_t k = 0; k < levels; ++k) {
        grid[k] = finite_grid_value(k, levels);
    }
    return grid;
}

/// Nearest grid point to a value already in [0, 1]; exact halves go to the lower index.
inline FiniteCell
finite_assign_unit(double s, std::uint32_t levels) noexcept {
    const double scaled = s * static_cast<double>(levels - 1);
    double lower = std::floor(scaled);
    if (lower < 0.0) {
        lower = 0.0;
    }
    if (lower > static_cast<double>(levels - 1)) {
        lower = static_cast<double>(levels - 1);
    }
    auto index = static_cast<std::uint32_t>(lower);
    if (index + 1 < levels) {
        const double below = s - finite_grid_value(index, levels);
        const double above = finite_grid_value(index + 1, levels) - s;
        if (above < below) {
            ++index;
        }
    }
    const double diff = s - finite_grid_value(index, levels);
    return {index, diff * diff};
}

inline FiniteCell
finite_assign(double z, std::uint32_t levels) noexcept {
    return finite_assign_unit(sigmoid(z), levels);
}

}  // namespace gsq::detail
