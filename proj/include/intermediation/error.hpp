#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace intermed {

enum class ErrorCode {
    DuplicateValue,
    NonPositiveValue,
    LengthMismatch,
    SequenceMismatch,
    UnknownAlgorithm,
    BadFamilyParams,
    BadParams,
    TooLarge,
    ZeroBenchmark,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace intermed
