#pragma once

#include <stdexcept>
#include <string>

namespace platescan {

// Bad input: files, manifests, images, mismatched dimensions, invalid configs.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A violated internal invariant. Indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace platescan
