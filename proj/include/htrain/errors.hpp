#pragma once

#include <stdexcept>
#include <string>

namespace htrain {

// Malformed or out-of-range user input (files, configs, parameters).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A surrogate fit could not be produced or misses its quality ceiling.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The instance is provably infeasible before or during solving.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An exact model was evaluated outside its domain of validity.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace htrain
