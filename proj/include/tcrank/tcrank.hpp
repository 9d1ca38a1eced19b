#ifndef TCRANK_TCRANK_HPP
#define TCRANK_TCRANK_HPP

/**
 * @file tcrank.hpp
 * @brief Umbrella header for the **tcrank** library.
 */

#include "errors.hpp"
#include "special.hpp"
#include "matlin.hpp"
#include "summaries.hpp"
#include "ebayes.hpp"
#include "random.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "simulate.hpp"
#include "pipeline.hpp"
#include "evaluate.hpp"
#include "io.hpp"

namespace tcrank {

inline constexpr const char* version = "0.1.0";

}

#endif
