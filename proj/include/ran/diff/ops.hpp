// Differentiable ops over Tape nodes. Every op checks operand shapes and
// throws ShapeError on mismatch; the tape throws NumericError if a result is
// not finite.
//
// Row-batched layout: a batch of B vectors of width c is a B x c matrix.
// "Grouped" ops treat a (B*a) x c matrix as B consecutive groups of a rows,
// which is how padded per-window neighbor sets are stored.

#pragma once

#include <vector>

#include "ran/diff/tape.hpp"

namespace ran::diff {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var div(Var a, Var b);  // elementwise
// Adds (subtracts) a 1 x c row to every row of a.
Var add_row(Var a, Var row);
Var sub_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
// max(a, lo) elementwise; the gradient passes only where a > lo.
Var clamp_min(Var a, double lo);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
// Row-major reinterpretation; element order is preserved.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);

Var sum(Var a);        // 1 x 1
Var mean(Var a);       // 1 x 1
Var sum_rows(Var a);   // 1 x c, sums over rows
Var mean_rows(Var a);  // 1 x c
Var row_means(Var a);  // r x 1, means over columns
Var squared_norm(Var a);  // 1 x 1, sum of squares
// Euclidean norm of all entries, 1 x 1. The gradient at the origin is zero.
Var norm(Var a);
// Euclidean norm of each row, r x 1. Zero rows get a zero gradient.
Var row_norms(Var a);

// Row-wise softmax over entries where mask != 0. Masked entries get weight 0;
// a fully masked row yields all zeros and passes no gradient.
Var masked_softmax(Var logits, const Mat& mask);
Var softmax_rows(Var logits);

// q: B x d, keys: (B*a) x d  ->  B x a with out(b, j) = q_b . keys_{b*a + j}.
Var group_dot(Var q, Var keys);
// w: B x a, values: (B*a) x d  ->  B x d with out_b = sum_j w(b, j) values_{b*a + j}.
Var group_weighted_sum(Var w, Var values);

// x: n x c, y: m x c  ->  n x m matrix of squared Euclidean distances.
Var pairwise_sq_dists(Var x, Var y);

struct MinSelection {
  Var value;                // B x 1
  std::vector<int> argmin;  // per row, lowest index wins ties
};
// Row-wise minimum across several B x 1 columns. The gradient flows only to
// the selected column of each row.
MinSelection rowwise_min(const std::vector<Var>& columns);

}  // namespace ran::diff
