#pragma once

#include "mlrs/pool.hpp"
#include "mlrs/selection.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace mlrs {

/// Accuracies compared within this tolerance count as ties.
inline constexpr double win_tolerance = 1e-12;

struct GridCell {
    std::optional<double> accuracy;  ///< empty when excluded
    std::string excluded_reason;

    [[nodiscard]] bool ok() const noexcept { return accuracy.has_value(); }

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Test accuracy of every (pool scheme, DS method) pair on one dataset.
struct GridResult {
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::array<std::array<GridCell, 7>, 7> cells;  // [pool][ds]

    [[nodiscard]] const GridCell& cell(PoolScheme p, DsMethod m) const noexcept {
        return cells[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)];
    }
    [[nodiscard]] GridCell& cell(PoolScheme p, DsMethod m) noexcept { return cells[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)]; }

    [[nodiscard]] bool complete() const noexcept {
        for (const auto& row : cells) {
            for (const auto& c : row) {
                if (!c.ok()) {
                    return false;
                }
            }
        }
        return true;
    }

    friend bool operator==(const GridResult&, const GridResult&) = default;
};

}  // namespace mlrs
