#pragma once

#include <stdexcept>
#include <string>

namespace lcx {

// Numerical failure tagged with a stable code such as "tau-bracket-failure".
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& detail = {}) {
    throw NumericalError(code, detail);
}

}  // namespace lcx
