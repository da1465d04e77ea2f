#include "ran/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace ran::diff {
namespace {

std::string shape_str(const Mat& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                     shape_str(b.value()));
  }
}

void require_row(const char* op, Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError(std::string(op) + ": expected 1x" + std::to_string(a.cols()) +
                     " row, got " + shape_str(row.value()));
  }
}

void require_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ShapeError(std::string(op) + ": operands on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + shape_str(a.value()) + " * " +
                     shape_str(b.value()));
  }
  Mat out = a.value() * b.value();
  return a.tape().record("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Mat& g, const Mat&) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var transpose(Var a) {
  Mat out = a.value().transpose();
  return a.tape().record("transpose", std::move(out), {a},
                         [a](Tape& t, const Mat& g, const Mat&) { t.accumulate(a, g.transpose()); });
}

Var add(Var a, Var b) {
  require_tape("add", a, b);
  require_same_shape("add", a, b);
  Mat out = a.value() + b.value();
  return a.tape().record("add", std::move(out), {a, b}, [a, b](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_tape("sub", a, b);
  require_same_shape("sub", a, b);
  Mat out = a.value() - b.value();
  return a.tape().record("sub", std::move(out), {a, b}, [a, b](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  require_tape("mul", a, b);
  require_same_shape("mul", a, b);
  Mat out = a.value().cwiseProduct(b.value());
  return a.tape().record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Mat& g, const Mat&) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var div(Var a, Var b) {
  require_tape("div", a, b);
  require_same_shape("div", a, b);
  Mat out = a.value().cwiseQuotient(b.value());
  return a.tape().record("div", std::move(out), {a, b}, [a, b](Tape& t, const Mat& g, const Mat&) {
    const Mat& bv = t.value(b);
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseQuotient(bv));
    if (t.needs_grad(b)) {
      Mat gb = -(g.array() * t.value(a).array() / (bv.array() * bv.array())).matrix();
      t.accumulate(b, gb);
    }
  });
}

Var add_row(Var a, Var row) {
  require_tape("add_row", a, row);
  require_row("add_row", a, row);
  Mat out = a.value().rowwise() + row.value().row(0);
  return a.tape().record("add_row", std::move(out), {a, row}, [a, row](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var sub_row(Var a, Var row) {
  require_tape("sub_row", a, row);
  require_row("sub_row", a, row);
  Mat out = a.value().rowwise() - row.value().row(0);
  return a.tape().record("sub_row", std::move(out), {a, row}, [a, row](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, -g.colwise().sum());
  });
}

Var scale(Var a, double s) {
  Mat out = a.value() * s;
  return a.tape().record("scale", std::move(out), {a},
                         [a, s](Tape& t, const Mat& g, const Mat&) { t.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
  Mat out = (a.value().array() + s).matrix();
  return a.tape().record("add_scalar", std::move(out), {a},
                         [a](Tape& t, const Mat& g, const Mat&) { t.accumulate(a, g); });
}

Var sigmoid(Var a) {
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape().record("sigmoid", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat& y) {
    t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var tanh(Var a) {
  Mat out = a.value().array().tanh().matrix();
  return a.tape().record("tanh", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat& y) {
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var exp(Var a) {
  Mat out = a.value().array().exp().matrix();
  return a.tape().record("exp", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat& y) {
    t.accumulate(a, g.cwiseProduct(y));
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw NumericError("log: non-positive argument");
  Mat out = a.value().array().log().matrix();
  return a.tape().record("log", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g.cwiseQuotient(t.value(a)));
  });
}

Var clamp_min(Var a, double lo) {
  Mat out = a.value().array().max(lo).matrix();
  return a.tape().record("clamp_min", std::move(out), {a},
                         [a, lo](Tape& t, const Mat& g, const Mat&) {
                           Mat pass = (t.value(a).array() > lo).cast<double>().matrix();
                           t.accumulate(a, g.cwiseProduct(pass));
                         });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require_tape("concat_cols", parts.front(), p);
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape().record("concat_cols", std::move(out), parts,
                                     [parts](Tape& t, const Mat& g, const Mat&) {
                                       Eigen::Index off = 0;
                                       for (const Var& p : parts) {
                                         const Eigen::Index c = t.value(p).cols();
                                         t.accumulate(p, g.middleCols(off, c));
                                         off += c;
                                       }
                                     });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require_tape("concat_rows", parts.front(), p);
    if (p.cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().tape().record("concat_rows", std::move(out), parts,
                                     [parts](Tape& t, const Mat& g, const Mat&) {
                                       Eigen::Index off = 0;
                                       for (const Var& p : parts) {
                                         const Eigen::Index r = t.value(p).rows();
                                         t.accumulate(p, g.middleRows(off, r));
                                         off += r;
                                       }
                                     });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: range out of bounds");
  }
  Mat out = a.value().middleCols(start, count);
  return a.tape().record("slice_cols", std::move(out), {a},
                         [a, start, count](Tape& t, const Mat& g, const Mat&) {
                           if (!t.needs_grad(a)) return;
                           Mat full = Mat::Zero(t.value(a).rows(), t.value(a).cols());
                           full.middleCols(start, count) = g;
                           t.accumulate(a, full);
                         });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: range out of bounds");
  }
  Mat out = a.value().middleRows(start, count);
  return a.tape().record("slice_rows", std::move(out), {a},
                         [a, start, count](Tape& t, const Mat& g, const Mat&) {
                           if (!t.needs_grad(a)) return;
                           Mat full = Mat::Zero(t.value(a).rows(), t.value(a).cols());
                           full.middleRows(start, count) = g;
                           t.accumulate(a, full);
                         });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw ShapeError("reshape: element count mismatch");
  Mat out = Eigen::Map<const Mat>(a.value().data(), rows, cols);
  return a.tape().record("reshape", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat&) {
    const Mat& av = t.value(a);
    t.accumulate(a, Eigen::Map<const Mat>(g.data(), av.rows(), av.cols()));
  });
}

Var sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record("sum", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat&) {
    const Mat& av = t.value(a);
    t.accumulate(a, Mat::Constant(av.rows(), av.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty operand");
  Mat out(1, 1);
  out(0, 0) = a.value().mean();
  return a.tape().record("mean", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat&) {
    const Mat& av = t.value(a);
    t.accumulate(a, Mat::Constant(av.rows(), av.cols(), g(0, 0) / double(av.size())));
  });
}

Var sum_rows(Var a) {
  Mat out = a.value().colwise().sum();
  return a.tape().record("sum_rows", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat&) {
    t.accumulate(a, g.replicate(t.value(a).rows(), 1));
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows: no rows");
  const double n = double(a.rows());
  Mat out = a.value().colwise().sum() / n;
  return a.tape().record("mean_rows", std::move(out), {a},
                         [a, n](Tape& t, const Mat& g, const Mat&) {
                           t.accumulate(a, (g / n).replicate(t.value(a).rows(), 1));
                         });
}

Var row_means(Var a) {
  if (a.cols() == 0) throw ShapeError("row_means: no columns");
  const double n = double(a.cols());
  Mat out = a.value().rowwise().sum() / n;
  return a.tape().record("row_means", std::move(out), {a},
                         [a, n](Tape& t, const Mat& g, const Mat&) {
                           t.accumulate(a, (g / n).replicate(1, t.value(a).cols()));
                         });
}

Var squared_norm(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape().record("squared_norm", std::move(out), {a},
                         [a](Tape& t, const Mat& g, const Mat&) {
                           t.accumulate(a, t.value(a) * (2.0 * g(0, 0)));
                         });
}

Var norm(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().norm();
  return a.tape().record("norm", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat& y) {
    const double n = y(0, 0);
    if (n == 0.0) return;
    t.accumulate(a, t.value(a) * (g(0, 0) / n));
  });
}

Var row_norms(Var a) {
  Mat out = a.value().rowwise().norm();
  return a.tape().record("row_norms", std::move(out), {a}, [a](Tape& t, const Mat& g, const Mat& y) {
    const Mat& av = t.value(a);
    Mat ga(av.rows(), av.cols());
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
      const double n = y(r, 0);
      ga.row(r) = n == 0.0 ? Mat::Zero(1, av.cols()) : Mat(av.row(r) * (g(r, 0) / n));
    }
    t.accumulate(a, ga);
  });
}

Var masked_softmax(Var logits, const Mat& mask) {
  const Mat& z = logits.value();
  if (mask.rows() != z.rows() || mask.cols() != z.cols()) {
    throw ShapeError("masked_softmax: mask shape " + shape_str(mask) + " vs logits " +
                     shape_str(z));
  }
  Mat out = Mat::Zero(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (mask(r, c) != 0.0) top = std::max(top, z(r, c));
    }
    if (top == -std::numeric_limits<double>::infinity()) continue;
    double total = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        out(r, c) = std::exp(z(r, c) - top);
        total += out(r, c);
      }
    }
    out.row(r) /= total;
  }
  return logits.tape().record("masked_softmax", std::move(out), {logits},
                              [logits](Tape& t, const Mat& g, const Mat& y) {
                                // Masked entries have y == 0, so they receive no gradient.
                                Mat dot = (g.cwiseProduct(y)).rowwise().sum();
                                Mat gz = y.cwiseProduct(g - dot.replicate(1, g.cols()));
                                t.accumulate(logits, gz);
                              });
}

Var softmax_rows(Var logits) {
  return masked_softmax(logits, Mat::Ones(logits.rows(), logits.cols()));
}

Var group_dot(Var q, Var keys) {
  require_tape("group_dot", q, keys);
  const Eigen::Index batch = q.rows();
  if (batch == 0 || keys.rows() % batch != 0 || keys.cols() != q.cols()) {
    throw ShapeError("group_dot: keys " + shape_str(keys.value()) + " incompatible with q " +
                     shape_str(q.value()));
  }
  const Eigen::Index group = keys.rows() / batch;
  const Mat& qv = q.value();
  const Mat& kv = keys.value();
  Mat out(batch, group);
  for (Eigen::Index b = 0; b < batch; ++b) {
    out.row(b) = (kv.middleRows(b * group, group) * qv.row(b).transpose()).transpose();
  }
  return q.tape().record("group_dot", std::move(out), {q, keys},
                         [q, keys, group](Tape& t, const Mat& g, const Mat&) {
                           const Mat& qv = t.value(q);
                           const Mat& kv = t.value(keys);
                           const Eigen::Index batch = qv.rows();
                           if (t.needs_grad(q)) {
                             Mat gq(batch, qv.cols());
                             for (Eigen::Index b = 0; b < batch; ++b) {
                               gq.row(b) = g.row(b) * kv.middleRows(b * group, group);
                             }
                             t.accumulate(q, gq);
                           }
                           if (t.needs_grad(keys)) {
                             Mat gk(kv.rows(), kv.cols());
                             for (Eigen::Index b = 0; b < batch; ++b) {
                               gk.middleRows(b * group, group) = g.row(b).transpose() * qv.row(b);
                             }
                             t.accumulate(keys, gk);
                           }
                         });
}

Var group_weighted_sum(Var w, Var values) {
  require_tape("group_weighted_sum", w, values);
  const Eigen::Index batch = w.rows();
  const Eigen::Index group = w.cols();
  if (values.rows() != batch * group) {
    throw ShapeError("group_weighted_sum: values " + shape_str(values.value()) +
                     " incompatible with weights " + shape_str(w.value()));
  }
  const Mat& wv = w.value();
  const Mat& vv = values.value();
  Mat out(batch, vv.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    out.row(b) = wv.row(b) * vv.middleRows(b * group, group);
  }
  return w.tape().record("group_weighted_sum", std::move(out), {w, values},
                         [w, values](Tape& t, const Mat& g, const Mat&) {
                           const Mat& wv = t.value(w);
                           const Mat& vv = t.value(values);
                           const Eigen::Index batch = wv.rows();
                           const Eigen::Index group = wv.cols();
                           if (t.needs_grad(w)) {
                             Mat gw(batch, group);
                             for (Eigen::Index b = 0; b < batch; ++b) {
                               gw.row(b) = g.row(b) * vv.middleRows(b * group, group).transpose();
                             }
                             t.accumulate(w, gw);
                           }
                           if (t.needs_grad(values)) {
                             Mat gv(vv.rows(), vv.cols());
                             for (Eigen::Index b = 0; b < batch; ++b) {
                               gv.middleRows(b * group, group) = wv.row(b).transpose() * g.row(b);
                             }
                             t.accumulate(values, gv);
                           }
                         });
}

Var pairwise_sq_dists(Var x, Var y) {
  require_tape("pairwise_sq_dists", x, y);
  if (x.cols() != y.cols()) throw ShapeError("pairwise_sq_dists: feature width mismatch");
  const Mat& xv = x.value();
  const Mat& yv = y.value();
  Mat out(xv.rows(), yv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    for (Eigen::Index j = 0; j < yv.rows(); ++j) {
      out(i, j) = (xv.row(i) - yv.row(j)).squaredNorm();
    }
  }
  return x.tape().record("pairwise_sq_dists", std::move(out), {x, y},
                         [x, y](Tape& t, const Mat& g, const Mat&) {
                           const Mat& xv = t.value(x);
                           const Mat& yv = t.value(y);
                           if (t.needs_grad(x)) {
                             Mat gx = 2.0 * (g.rowwise().sum().asDiagonal() * xv - g * yv);
                             t.accumulate(x, gx);
                           }
                           if (t.needs_grad(y)) {
                             Mat gy = 2.0 * (g.colwise().sum().transpose().asDiagonal() * yv -
                                             g.transpose() * xv);
                             t.accumulate(y, gy);
                           }
                         });
}

MinSelection rowwise_min(const std::vector<Var>& columns) {
  if (columns.empty()) throw ShapeError("rowwise_min: no operands");
  const Eigen::Index rows = columns.front().rows();
  for (const Var& c : columns) {
    require_tape("rowwise_min", columns.front(), c);
    if (c.rows() != rows || c.cols() != 1) throw ShapeError("rowwise_min: operands must be Bx1");
  }
  MinSelection sel;
  sel.argmin.assign(std::size_t(rows), 0);
  Mat out(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    int best = 0;
    double best_v = columns[0].value()(r, 0);
    for (std::size_t k = 1; k < columns.size(); ++k) {
      const double v = columns[k].value()(r, 0);
      if (v < best_v) {
        best_v = v;
        best = int(k);
      }
    }
    out(r, 0) = best_v;
    sel.argmin[std::size_t(r)] = best;
  }
  sel.value = columns.front().tape().record(
      "rowwise_min", std::move(out), columns,
      [columns, argmin = sel.argmin](Tape& t, const Mat& g, const Mat&) {
        for (std::size_t k = 0; k < columns.size(); ++k) {
          if (!t.needs_grad(columns[k])) continue;
          Mat gk = Mat::Zero(g.rows(), 1);
          bool any = false;
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            if (argmin[std::size_t(r)] == int(k)) {
              gk(r, 0) = g(r, 0);
              any = true;
            }
          }
          if (any) t.accumulate(columns[k], gk);
        }
      });
  return sel;
}

}  // namespace ran::diff
