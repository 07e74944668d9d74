#pragma once

#include <stdexcept>

namespace rfp {

// Exit-code mapping for the CLI: config_error -> 2, data_error -> 3,
// numeric_error -> 4. dim_error is a programming/contract failure.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rfp
