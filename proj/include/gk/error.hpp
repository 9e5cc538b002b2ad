#pragma once

#include <stdexcept>
#include <string>

namespace gk {

// Bad input data: unreadable files, malformed headers, inconsistent manifests.
// The CLI maps this to exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: non-finite loss, singular innovation covariance, etc.
// The CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gk
