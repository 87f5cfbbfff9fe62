#pragma once

#include <stdexcept>
#include <string>

namespace mobprof {

/// Bad or inconsistent input data, files or configuration. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A stage was asked to run before the stage that produces its inputs.
class MissingStageError : public InputError {
public:
    MissingStageError(std::string stage, const std::string& what)
        : InputError(what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// An internal invariant did not hold. Maps to CLI exit code 2.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mobprof
