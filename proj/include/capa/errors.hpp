#pragma once

#include <stdexcept>
#include <string>

namespace capa {

// Invalid physical or mathematical input (singular kernel, empty spectrum, ...).
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structurally invalid configuration (orders out of range, budgets exceeded, bad scenario files).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown at runtime (non-finite iterates, failed factorizations).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rank-deficient linear system where full rank is required.
class rank_error : public numerical_error {
public:
    explicit rank_error(const std::string& msg) : numerical_error(msg) {}
};

// Singular second-kind integral equation (unit eigenvalue of the kernel).
class resonance_error : public numerical_error {
public:
    explicit resonance_error(const std::string& msg) : numerical_error(msg) {}
};

} // namespace capa
