#pragma once

#include <stdexcept>
#include <string>

namespace lilate {

// Every library failure carries a stable machine-readable code next to the
// human message; the CLI serializes both.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace lilate
