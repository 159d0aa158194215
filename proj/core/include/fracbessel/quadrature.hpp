#pragma once

#include <cstddef>
#include <vector>

namespace fracbessel {

/// Nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b, a, b > -1.
/// Rules are built once by Golub-Welsch and cached process-wide; the returned
/// reference stays valid for the life of the program.
const QuadratureRule& gauss_jacobi(std::size_t n, double a, double b);

/// Gauss-Legendre rule (a = b = 0).
const QuadratureRule& gauss_legendre(std::size_t n);

}  // namespace fracbessel
