#pragma once

#include <stdexcept>
#include <string>

namespace rfim {

enum class Errc {
    invalid_argument,
    dimension_mismatch,
    budget_exceeded,
    cap_exceeded,
    precondition,
    schema,
};

inline const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
    case Errc::dimension_mismatch: return "DIMENSION_MISMATCH";
    case Errc::budget_exceeded: return "BUDGET_EXCEEDED";
    case Errc::cap_exceeded: return "CAP_EXCEEDED";
    case Errc::precondition: return "PRECONDITION";
    case Errc::schema: return "SCHEMA";
    }
    return "UNKNOWN";
}

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

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what)
{
    if (!cond) fail(code, what);
}

} // namespace rfim
