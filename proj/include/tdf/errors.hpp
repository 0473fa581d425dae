#pragma once

#include <stdexcept>
#include <string>

namespace tdf {

// Every contract violation in the library throws TdfError with a kind that
// callers (and tests) can branch on. Transport and verdict errors are the
// retryable/deferrable ones; the rest indicate misuse or bad input.
enum class ErrorKind {
    parse,
    validation,
    size,
    shape,
    duplicate_entry,
    degenerate_embedding,
    bad_template,
    transport,
    malformed_verdict,
    evaluator_unavailable,
    oracle_misuse,
    config,
    consistency,
    undefined_impurity,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::size: return "size";
        case ErrorKind::shape: return "shape";
        case ErrorKind::duplicate_entry: return "duplicate_entry";
        case ErrorKind::degenerate_embedding: return "degenerate_embedding";
        case ErrorKind::bad_template: return "bad_template";
        case ErrorKind::transport: return "transport";
        case ErrorKind::malformed_verdict: return "malformed_verdict";
        case ErrorKind::evaluator_unavailable: return "evaluator_unavailable";
        case ErrorKind::oracle_misuse: return "oracle_misuse";
        case ErrorKind::config: return "config";
        case ErrorKind::consistency: return "consistency";
        case ErrorKind::undefined_impurity: return "undefined_impurity";
    }
    return "unknown";
}

class TdfError : public std::runtime_error {
public:
    TdfError(ErrorKind kind, const std::string& message, long line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + message
                                       : message),
          kind_(kind),
          line_(line) {}

    ErrorKind kind() const noexcept { return kind_; }

    // 1-based input line for parse/validation errors, -1 when not applicable.
    long line() const noexcept { return line_; }

private:
    ErrorKind kind_;
    long line_;
};

}  // namespace tdf
