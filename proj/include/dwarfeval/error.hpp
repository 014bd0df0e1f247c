#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dwarfeval {

enum class ErrorKind {
    invalid_size,
    invalid_input,
    singular_matrix,
    domain,
    invalid_measurement,
    aggregation,
    insufficient_overlap,
    empty_series,
    parse,
    configuration,
    usage,
    io,
    environment,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_size: return "invalid-size";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::singular_matrix: return "singular-matrix";
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_measurement: return "invalid-measurement";
    case ErrorKind::aggregation: return "aggregation";
    case ErrorKind::insufficient_overlap: return "insufficient-overlap";
    case ErrorKind::empty_series: return "empty-series";
    case ErrorKind::parse: return "parse";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
    case ErrorKind::environment: return "environment";
    }
    return "unknown";
}

/// Base exception for everything the toolkit throws on a contract violation.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the unpivoted factorization when a pivot is exactly zero.
class SingularMatrixError : public Error {
public:
    explicit SingularMatrixError(std::size_t pivot)
        : Error(ErrorKind::singular_matrix, "zero pivot at index " + std::to_string(pivot)),
          pivot_(pivot) {}

    std::size_t pivot_index() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Import failure with a location inside the offending file.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& what)
        : Error(ErrorKind::parse, "line " + std::to_string(line) +
                                      (field.empty() ? "" : ", field '" + field + "'") + ": " + what),
          line_(line), field_(std::move(field)), detail_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string field_;
    std::string detail_;
};

} // namespace dwarfeval
