#ifndef SPACEFILL_DESIGN_HPP
#define SPACEFILL_DESIGN_HPP

#include "spacefill/types.hpp"

#include <cstdint>
#include <vector>

namespace spacefill {

/// Largest dimension covered by the built-in direction numbers.
inline constexpr Index kSobolMaxDimension = 21;

/// First n points of the unscrambled Sobol sequence in Gray-code order, with the
/// all-zeros point skipped. Direction numbers are the Joe-Kuo (new-joe-kuo-6.21201)
/// values. Bit-exact for a given (n, d).
PointCloud sobol_points(Index n, Index d);

/// Jittered Latin hypercube: in every dimension each stratum [i/n, (i+1)/n) holds
/// exactly one point, strata permuted and positions jittered from the seed.
PointCloud lhs_points(Index n, Index d, std::uint64_t seed);

/// Greedy maximin (p-dispersion heuristic). Returns m candidate row indices in
/// selection order. Starts from the farthest candidate pair (exact search below
/// 10,000 candidates, otherwise centroid-anchored two-sweep approximation), then
/// repeatedly adds the candidate whose distance to the selection is largest.
/// Ties go to the lowest index.
std::vector<Index> greedy_maximin(const PointCloud& candidates, Index m);

}  // namespace spacefill

#endif  // SPACEFILL_DESIGN_HPP
