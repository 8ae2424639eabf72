#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vfv {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// Grids that are not dyadically nested, or fields living on different grids.
class TopologyError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "topology"; }
};

/// A density value that is not strictly positive.
class PositivityLoss : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "positivity"; }
};

/// The inner fixed-point iteration exhausted its iteration budget.
class NonConvergence : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "nonconvergence"; }
};

/// A time step that kept failing after the maximum number of dt halvings.
class StepFailure : public Error {
public:
    StepFailure(std::size_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    const char* kind() const noexcept override { return "step"; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class PlanError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "plan"; }
};

/// A sample solve that failed; carries the sample id.
class SampleFailure : public Error {
public:
    SampleFailure(long long sample_id, const std::string& what)
        : Error("sample " + std::to_string(sample_id) + ": " + what), sample_id_(sample_id) {}
    const char* kind() const noexcept override { return "sample"; }
    long long sample_id() const noexcept { return sample_id_; }

private:
    long long sample_id_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& key, const std::string& what)
        : Error(format(line, key, what)), line_(line), key_(key) {}
    const char* kind() const noexcept override { return "parse"; }
    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    static std::string format(std::size_t line, const std::string& key, const std::string& what)
    {
        std::string s = "line " + std::to_string(line);
        if (!key.empty()) s += ", key '" + key + "'";
        return s + ": " + what;
    }

    std::size_t line_;
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

} // namespace vfv
