#pragma once

#include <stdexcept>
#include <string>

namespace hiest {

// Operand shapes disagree. Messages name both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Axis index outside the operand's rank.
struct AxisError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Wrong tensor rank (e.g. non-scalar loss handed to backward).
struct RankError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Temporal window longer than the available series.
struct LengthError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Degenerate numeric inputs: zero kernel bandwidth, zero train std,
// empty component, split too short for one window.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File parse failure. Message carries the offending line number.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hiest
