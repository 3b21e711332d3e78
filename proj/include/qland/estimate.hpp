#pragma once

#include <cstdint>

namespace qland {

/// Cost value with its statistical error. shots = 0 marks an exact value.
struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t shots = 0;
};

} // namespace qland
