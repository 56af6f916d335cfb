#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ahelab {

enum class Errc {
    InvalidSpec,
    UnsupportedFamily,
    ShapeMismatch,
    SymmetryViolation,
    OnBoundary,
    OutsideChart,
    GridTooCoarse,
    InsufficientSamples,
    ChartEscapesDomain,
    LogCaseUnsupported,
    NonPositiveRadius,
    StiffIntegration,
    DegenerateWindow,
    ParameterViolation,
    WeightOutOfRange,
    ResolutionTooLow,
    EigenFailure,
    SupportEscapesCollar,
    WeightTooLarge,
    UnsupportedDegree,
    NotPositiveDefinite,
    GridMismatch,
    NotEinsteinBase,
    IndicialSingular,
    OrderOutOfRange,
    NoConvergence,
    GaugeObstruction,
};

[[nodiscard]] std::string_view errc_name(Errc c) noexcept;

// Precondition failures are configuration errors; the rest are numeric.
[[nodiscard]] bool errc_is_numeric(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace ahelab
