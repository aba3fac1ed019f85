#pragma once

// Canonical factorization D = S E with a leading column of ones in S and the
// unit effect (1,0,...,0) as the first column of E.

#include "gpt/core.hpp"

namespace gpt::decompose {

struct Decomposition {
  GptModel model;
  Index requested_rank = 0;
  Index rank = 0;           // after truncation
  bool truncated = false;   // rank < requested_rank
  VectorXd singular_values; // of the centred block, all of them
  double residual = 0.0;    // max |S E - D|
};

// D must have an all-ones first column (to 1e-12). Singular values of the
// centred block below 1e-10 of the largest are dropped and the rank reduced.
Decomposition canonical_decompose(const MatrixXd& d, Index k);
Decomposition canonical_decompose(const ProbabilityMatrix& d, Index k);

// Decomposes [D | 1 - D]; effect j + n is the complement of effect j.
Decomposition extended_decompose(const MatrixXd& d, Index k);
Decomposition extended_decompose(const ProbabilityMatrix& d, Index k);

}  // namespace gpt::decompose
