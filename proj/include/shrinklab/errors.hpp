#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace shrinklab {

/// Exit-code families used by the CLI (sysexits-style).
enum class ErrorKind : int { Config = 64, Model = 65, Numerical = 70 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), kind_(kind), name_(std::move(name)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& name() const { return name_; }

private:
    ErrorKind kind_;
    std::string name_;
};

#define SHRINKLAB_ERROR(NAME, KIND)                                              \
    struct NAME : Error {                                                        \
        explicit NAME(const std::string& w) : Error(ErrorKind::KIND, #NAME, w) {} \
    }

SHRINKLAB_ERROR(ConfigError, Config);
SHRINKLAB_ERROR(ModelError, Model);
SHRINKLAB_ERROR(DegenerateMetric, Model);
SHRINKLAB_ERROR(FrameDiscontinuity, Model);
SHRINKLAB_ERROR(VanishingMeanCurvature, Model);
SHRINKLAB_ERROR(UnsupportedDomain, Model);
SHRINKLAB_ERROR(NotMinimalInSphere, Model);
SHRINKLAB_ERROR(NotACriticalPoint, Model);
SHRINKLAB_ERROR(DimensionMismatch, Numerical);
SHRINKLAB_ERROR(NonFiniteValue, Numerical);
SHRINKLAB_ERROR(EigensolverFailure, Numerical);
SHRINKLAB_ERROR(ImmersionLost, Numerical);
SHRINKLAB_ERROR(TruncationTooSmall, Numerical);

#undef SHRINKLAB_ERROR

}  // namespace shrinklab
