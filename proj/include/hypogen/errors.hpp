#pragma once

#include <stdexcept>
#include <string>

namespace hypogen {

/// Invalid caller input: bad arguments, violated preconditions, unusable config.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A model reply (or other text) could not be parsed. Keeps the raw text for audit.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::string raw)
        : std::runtime_error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Failure talking to an LLM provider.
class BackendError : public std::runtime_error {
public:
    enum class Kind { auth, rate_limit, transport, malformed_reply };

    BackendError(Kind kind, const std::string& what, int retry_count = 0)
        : std::runtime_error(what), kind_(kind), retry_count_(retry_count) {}

    Kind kind() const noexcept { return kind_; }
    int retry_count() const noexcept { return retry_count_; }

private:
    Kind kind_;
    int retry_count_;
};

}  // namespace hypogen
