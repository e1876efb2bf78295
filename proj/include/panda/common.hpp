#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace panda {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Typed failures used across the pipeline. Guard trips during integration are
// reported through GuardReport, not exceptions; everything else that violates
// an operation contract throws one of these.

struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    long index;
    NumericError(const std::string& what, long index_)
        : std::runtime_error(what + " (component " + std::to_string(index_) + ")"),
          index(index_) {}
};

struct DegenerateFlowError : std::runtime_error {
    explicit DegenerateFlowError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsampleableSystemError : std::runtime_error {
    explicit UnsampleableSystemError(const std::string& what) : std::runtime_error(what) {}
};

struct FormatError : std::runtime_error {
    std::size_t byte_offset;
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
};

struct UnsupportedVersionError : std::runtime_error {
    std::uint32_t found;
    explicit UnsupportedVersionError(std::uint32_t found_)
        : std::runtime_error("unsupported bundle version " + std::to_string(found_)),
          found(found_) {}
};

struct UnsupportedConfigError : std::runtime_error {
    explicit UnsupportedConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingArtifactError : std::runtime_error {
    std::string path;
    explicit MissingArtifactError(const std::string& path_)
        : std::runtime_error("missing upstream artifact: " + path_), path(path_) {}
};

}  // namespace panda
