#pragma once

#include <stdexcept>
#include <string>

namespace tcu {

enum class Errc {
    OutOfBounds,
    InvalidStride,
    WrongKind,
    ShapeMismatch,
    BadLength,
    BadConfig,
    ParseError,
    IoError,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace tcu
