#pragma once

// Symmetric Gauss rules on the triangle (Dunavant orbit structure), polished
// to full double precision by tools/gen_triangle_rules.py. Weights sum to 1.

#include <array>
#include <span>

namespace mfie::detail {

struct Orbit {
  char kind;  // 'c' centroid, '3' (a, a, 1-2a), '6' (a, b, 1-a-b)
  std::array<double, 3> values;  // orbit parameters followed by the weight
};

struct RuleTable {
  int degree;
  std::span<const Orbit> orbits;
};

inline constexpr Orbit kRule1[] = {{'c', {1.0}}};

inline constexpr Orbit kRule2[] = {{'3', {0.16666666666666666667, 0.33333333333333333333}}};

inline constexpr Orbit kRule4[] = {
    {'3', {0.44594849091596488632, 0.2233815896780114657}},
    {'3', {0.09157621350977074346, 0.10995174365532186764}},
};

inline constexpr Orbit kRule5[] = {
    {'c', {0.225}},
    {'3', {0.47014206410511508977, 0.13239415278850618074}},
    {'3', {0.1012865073234563388, 0.1259391805448271526}},
};

inline constexpr Orbit kRule6[] = {
    {'3', {0.24928674517091042129, 0.11678627572637936603}},
    {'3', {0.06308901449150222834, 0.050844906370206816921}},
    {'6', {0.31035245103378440542, 0.63650249912139864723, 0.082851075618373575194}},
};

inline constexpr Orbit kRule8[] = {
    {'c', {0.14431560767778716825}},
    {'3', {0.45929258829272315603, 0.095091634267284624794}},
    {'3', {0.17056930775176020662, 0.10321737053471825028}},
    {'3', {0.050547228317030975458, 0.032458497623198080311}},
    {'6', {0.26311282963463811342, 0.72849239295540428124, 0.027230314174434994265}},
};

inline constexpr Orbit kRule9[] = {
    {'c', {0.097135796282798833819}},
    {'3', {0.48968251919873762778, 0.031334700227139070537}},
    {'3', {0.43708959149293663727, 0.077827541004774279317}},
    {'3', {0.18820353561903273024, 0.079647738927210253033}},
    {'3', {0.044729513394452709865, 0.025577675658698031262}},
    {'6', {0.22196298916076569568, 0.74119859878449802069, 0.043283539377289377289}},
};

inline constexpr Orbit kRule10[] = {
    {'c', {0.090817990382753580095}},
    {'3', {0.48557763338365737737, 0.036725957756466704717}},
    {'3', {0.1094815754850370548, 0.045321059435527934783}},
    {'6', {0.14170721941487995476, 0.30793983876412095017, 0.072757916845420108604}},
    {'6', {0.025003534762686386074, 0.24667256063990269392, 0.028327242531057484837}},
    {'6', {0.0095408154002994575802, 0.066803251012200265774, 0.0094216669637328234599}},
};

// The 4-point degree-3 and 13-point degree-7 Dunavant rules carry a negative
// centroid weight; requests for those degrees are served by the next rule up.
inline RuleTable rule_for_degree(int degree) {
  switch (degree) {
    case 1: return {1, kRule1};
    case 2: return {2, kRule2};
    case 3:
    case 4: return {4, kRule4};
    case 5: return {5, kRule5};
    case 6: return {6, kRule6};
    case 7:
    case 8: return {8, kRule8};
    case 9: return {9, kRule9};
    default: return {10, kRule10};
  }
}

}  // namespace mfie::detail
