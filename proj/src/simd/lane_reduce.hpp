#pragma once

namespace facefuse::simd {

// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)): the order a 256-bit register
// folds in halves. All variants must use exactly this tree.
template <class Real>
inline Real reduce_lanes(const Real (&l)[8]) {
    const Real a0 = l[0] + l[4];
    const Real a1 = l[1] + l[5];
    const Real a2 = l[2] + l[6];
    const Real a3 = l[3] + l[7];
    return (a0 + a2) + (a1 + a3);
}

}  // namespace facefuse::simd
