#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cids {

// Bad scenario/topology/ruleset configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Rule text rejected; offset is the byte position of the offending token.
class RuleParseError : public ConfigError {
public:
    RuleParseError(const std::string& what, std::size_t offset)
        : ConfigError(what + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Syslog encode/decode failure.
class CodecError : public std::runtime_error {
public:
    explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed SIEM query (unknown field, bad syntax). CLI exit code 2.
class QueryError : public std::runtime_error {
public:
    explicit QueryError(const std::string& what) : std::runtime_error(what) {}
};

// A contract the pipeline relies on was broken (out-of-order filter input,
// corrupted trace, failed conservation check). CLI exit code 3.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// Ground-truth bookkeeping went inconsistent while scoring (alert without a
// matching generated packet, label mismatch). CLI exit code 3.
class ScoringError : public InvariantError {
public:
    explicit ScoringError(const std::string& what) : InvariantError(what) {}
};

}  // namespace cids
