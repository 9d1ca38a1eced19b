#ifndef TCRANK_TESTS_FROZEN_ORACLES_HPP
#define TCRANK_TESTS_FROZEN_ORACLES_HPP

// Generated once by tests/oracles/compute_oracles.py; do not regenerate from the library.

namespace frozen {

inline constexpr double F_CDF_2_5_8_8 = 0.89172635794366535809;
inline constexpr double DIGAMMA_10_5 = 2.3030010342976863753;
inline constexpr double TRIGAMMA_10_5 = 0.099916956059126733204;
inline constexpr double MB_N3_K8_NU13_T50 = -3.2259561500762723558;
inline constexpr double MB_N1_K3_NU5 = -1.5164668241766746637;
inline constexpr double B_T2_5_N4_D0_3 = -1.4402904235866432877;
inline constexpr double ANOVA_F_3X3 = 13.176470588235289938;
inline constexpr double HELMERT3_S1_00 = 1.0;
inline constexpr double HELMERT3_S1_01 = 1.7320508075688772935;
inline constexpr double HELMERT3_S1_11 = 3.0;

}

#endif
