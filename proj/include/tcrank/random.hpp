#ifndef TCRANK_RANDOM_HPP
#define TCRANK_RANDOM_HPP

#include "errors.hpp"

#include <cmath>
#include <cstdint>
#include <random>

/**
 * @file random.hpp
 * @brief Reproducible random number streams.
 *
 * The standard library's distribution classes are implementation-defined, so the samplers here are written out explicitly
 * on top of `std::mt19937_64`, whose output sequence is fixed by the standard.
 */

namespace tcrank {

/**
 * Name of the generator and seeding scheme, recorded in output metadata.
 */
inline constexpr const char* rng_algorithm = "mt19937_64 seeded by splitmix64(seed, dataset, gene)";

/**
 * One round of the splitmix64 finalizer.
 */
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * @brief Random stream with explicit uniform, normal and gamma samplers.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : my_engine(seed) {}

    /**
     * Independent substream for one gene of one dataset.
     */
    static Rng substream(std::uint64_t seed, std::uint64_t dataset, std::uint64_t gene) {
        std::uint64_t s = splitmix64(seed);
        s = splitmix64(s ^ dataset);
        s = splitmix64(s ^ (gene * 0xd1342543de82ef95ULL));
        return Rng(s);
    }

    /**
     * @return Uniform draw on the open interval (0, 1).
     */
    double uniform() {
        // 53 random bits, offset by half a step to avoid the end points.
        return (static_cast<double>(my_engine() >> 11) + 0.5) * 0x1.0p-53;
    }

    /**
     * Standard normal draw by the Marsaglia polar method.
     */
    double normal() {
        if (my_has_spare) {
            my_has_spare = false;
            return my_spare;
        }
        double u, v, s;
        do {
            u = 2 * uniform() - 1;
            v = 2 * uniform() - 1;
            s = u * u + v * v;
        } while (s >= 1 || s == 0);
        const double factor = std::sqrt(-2 * std::log(s) / s);
        my_spare = v * factor;
        my_has_spare = true;
        return u * factor;
    }

    /**
     * Gamma draw with unit scale by the Marsaglia-Tsang method.
     */
    double gamma(double shape) {
        if (!(shape > 0)) {
            throw ParameterOutOfRange("gamma shape must be positive");
        }
        if (shape < 1) {
            const double g = gamma(shape + 1);
            return g * std::pow(uniform(), 1 / shape);
        }
        const double d = shape - 1.0 / 3, c = 1 / std::sqrt(9 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1 + c * x;
            } while (v <= 0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1 - 0.0331 * x * x * x * x || std::log(u) < 0.5 * x * x + d * (1 - v + std::log(v))) {
                return d * v;
            }
        }
    }

    double chi_squared(double df) {
        return 2 * gamma(df / 2);
    }

    /**
     * Inverse-gamma draw with the given shape and scale.
     */
    double inv_gamma(double shape, double scale) {
        return scale / gamma(shape);
    }

private:
    std::mt19937_64 my_engine;
    double my_spare = 0;
    bool my_has_spare = false;
};

}

#endif
