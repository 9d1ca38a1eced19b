#ifndef TCRANK_ERRORS_HPP
#define TCRANK_ERRORS_HPP

#include <stdexcept>
#include <string>

/**
 * @file errors.hpp
 * @brief Exception types thrown by the library.
 */

namespace tcrank {

/**
 * Broad category of a failure, used by the command-line tool to pick an exit code.
 */
enum class ErrorCategory : unsigned char { CONFIG, DATA, NUMERICAL };

/**
 * @brief Base class for every exception thrown by **tcrank**.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorCategory c, const std::string& name, const std::string& what) :
        std::runtime_error(name + ": " + what), my_category(c), my_name(name) {}

    ErrorCategory category() const { return my_category; }

    /**
     * @return Short name of the error kind, e.g. `"NotPositiveDefinite"`.
     */
    const std::string& name() const { return my_name; }

private:
    ErrorCategory my_category;
    std::string my_name;
};

#define TCRANK_DEFINE_ERROR(NAME, CATEGORY) \
    class NAME : public Error { \
    public: \
        explicit NAME(const std::string& what) : Error(ErrorCategory::CATEGORY, #NAME, what) {} \
    };

// Numerical failures.
TCRANK_DEFINE_ERROR(NotPositiveDefinite, NUMERICAL)
TCRANK_DEFINE_ERROR(NoConvergence, NUMERICAL)
TCRANK_DEFINE_ERROR(DomainError, NUMERICAL)
TCRANK_DEFINE_ERROR(InsufficientDegreesOfFreedom, NUMERICAL)
TCRANK_DEFINE_ERROR(DegenerateLayout, NUMERICAL)

// Problems with the data.
TCRANK_DEFINE_ERROR(InvalidDimension, DATA)
TCRANK_DEFINE_ERROR(DimensionMismatch, DATA)
TCRANK_DEFINE_ERROR(InsufficientReplicates, DATA)
TCRANK_DEFINE_ERROR(NonFiniteValue, DATA)
TCRANK_DEFINE_ERROR(UnpairedReplicate, DATA)
TCRANK_DEFINE_ERROR(TooFewGenes, DATA)
TCRANK_DEFINE_ERROR(TooFewTopGenes, DATA)
TCRANK_DEFINE_ERROR(TruthMismatch, DATA)
TCRANK_DEFINE_ERROR(LengthMismatch, DATA)
TCRANK_DEFINE_ERROR(ParseError, DATA)

// Problems with the requested configuration.
TCRANK_DEFINE_ERROR(ParameterOutOfRange, CONFIG)
TCRANK_DEFINE_ERROR(MissingHyperparameters, CONFIG)
TCRANK_DEFINE_ERROR(UnsupportedStatistic, CONFIG)

#undef TCRANK_DEFINE_ERROR

}

#endif
