// Copyright (c) 2026 The send-diar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "send/autodiff.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw InvalidInput(op + ": " + detail);
}

}  // namespace

Var Tape::emplace(Tensor value, std::string label,
                  std::function<void(Tape*)> backward) {
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  node.label = std::move(label);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

void Tape::check_var(Var v, const char* op) const {
  if (!v.valid() || v.id >= static_cast<int32_t>(nodes_.size())) {
    shape_error(op, "operand is not a node of this tape");
  }
}

std::string Tape::describe(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  return "'" + n.label + "' (" + n.value.shape_str() + ")";
}

Var Tape::constant(Tensor value, std::string label) {
  if (value.empty()) shape_error("constant", "empty tensor");
  return emplace(std::move(value), std::move(label));
}

Var Tape::param(Parameter& p) {
  if (p.value.empty()) {
    shape_error("param", "parameter '" + p.name + "' has no value");
  }
  if (!p.grad.same_shape(p.value)) {
    shape_error("param", "parameter '" + p.name +
                             "' gradient shape does not match value shape");
  }
  Var v = emplace(p.value, p.name.empty() ? "param" : p.name);
  bindings_.push_back({v.id, &p});
  return v;
}

const Tensor& Tape::value(Var v) const {
  check_var(v, "value");
  return nodes_[static_cast<size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
  check_var(v, "grad");
  const Tensor& g = nodes_[static_cast<size_t>(v.id)].grad;
  if (g.empty()) {
    throw InvalidInput("grad: backward() has not run over this node");
  }
  return g;
}

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  check_var(a, "matmul");
  check_var(b, "matmul");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.ndim() != 2 || tb.ndim() != 2) {
    shape_error("matmul",
                "expects rank-2 operands, got " + describe(a) + " and " +
                    describe(b));
  }
  int64_t m = transpose_a ? ta.dim(1) : ta.dim(0);
  int64_t k = transpose_a ? ta.dim(0) : ta.dim(1);
  int64_t kb = transpose_b ? tb.dim(1) : tb.dim(0);
  int64_t n = transpose_b ? tb.dim(0) : tb.dim(1);
  if (k != kb) {
    shape_error("matmul", "inner dimensions disagree: " + describe(a) +
                              (transpose_a ? "^T" : "") + " vs " + describe(b) +
                              (transpose_b ? "^T" : ""));
  }
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      double av = transpose_a ? ta.at(p, i) : ta.at(i, p);
      if (av == 0.0) continue;
      for (int64_t j = 0; j < n; ++j) {
        double bv = transpose_b ? tb.at(j, p) : tb.at(p, j);
        out.at(i, j) += av * bv;
      }
    }
  }
  Var o = emplace(std::move(out), "matmul");
  int32_t oid = o.id, aid = a.id, bid = b.id;
  nodes_[oid].backward = [oid, aid, bid, transpose_a, transpose_b, m, n,
                          k](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& ta = t->nodes_[aid].value;
    const Tensor& tb = t->nodes_[bid].value;
    Tensor& ga = t->nodes_[aid].grad;
    Tensor& gb = t->nodes_[bid].grad;
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) {
        double gv = g.at(i, j);
        if (gv == 0.0) continue;
        for (int64_t p = 0; p < k; ++p) {
          double av = transpose_a ? ta.at(p, i) : ta.at(i, p);
          double bv = transpose_b ? tb.at(j, p) : tb.at(p, j);
          if (transpose_a) {
            ga.at(p, i) += gv * bv;
          } else {
            ga.at(i, p) += gv * bv;
          }
          if (transpose_b) {
            gb.at(j, p) += gv * av;
          } else {
            gb.at(p, j) += gv * av;
          }
        }
      }
    }
  };
  return o;
}

Var Tape::add(Var a, Var b) {
  check_var(a, "add");
  check_var(b, "add");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    shape_error("add", describe(a) + " vs " + describe(b));
  }
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out.at(i) = ta.at(i) + tb.at(i);
  Var o = emplace(std::move(out), "add");
  int32_t oid = o.id, aid = a.id, bid = b.id;
  nodes_[oid].backward = [oid, aid, bid](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    Tensor& ga = t->nodes_[aid].grad;
    Tensor& gb = t->nodes_[bid].grad;
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i);
      gb.at(i) += g.at(i);
    }
  };
  return o;
}

Var Tape::add_row_broadcast(Var x, Var row) {
  check_var(x, "add_row_broadcast");
  check_var(row, "add_row_broadcast");
  const Tensor& tx = val(x);
  const Tensor& tr = val(row);
  if (tx.ndim() != 2 || tr.size() != tx.dim(1)) {
    shape_error("add_row_broadcast",
                describe(x) + " vs row " + describe(row));
  }
  Tensor out(tx.shape());
  int64_t rows = tx.dim(0), cols = tx.dim(1);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) out.at(r, c) = tx.at(r, c) + tr.at(c);
  }
  Var o = emplace(std::move(out), "add_row_broadcast");
  int32_t oid = o.id, xid = x.id, rid = row.id;
  nodes_[oid].backward = [oid, xid, rid, rows, cols](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    Tensor& gx = t->nodes_[xid].grad;
    Tensor& gr = t->nodes_[rid].grad;
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) {
        gx.at(r, c) += g.at(r, c);
        gr.at(c) += g.at(r, c);
      }
    }
  };
  return o;
}

Var Tape::mul(Var a, Var b) {
  check_var(a, "mul");
  check_var(b, "mul");
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    shape_error("mul", describe(a) + " vs " + describe(b));
  }
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out.at(i) = ta.at(i) * tb.at(i);
  Var o = emplace(std::move(out), "mul");
  int32_t oid = o.id, aid = a.id, bid = b.id;
  nodes_[oid].backward = [oid, aid, bid](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& ta = t->nodes_[aid].value;
    const Tensor& tb = t->nodes_[bid].value;
    Tensor& ga = t->nodes_[aid].grad;
    Tensor& gb = t->nodes_[bid].grad;
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i) * tb.at(i);
      gb.at(i) += g.at(i) * ta.at(i);
    }
  };
  return o;
}

Var Tape::scale(Var a, double c) {
  check_var(a, "scale");
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out.at(i) = ta.at(i) * c;
  Var o = emplace(std::move(out), "scale");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid, c](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) * c;
  };
  return o;
}

Var Tape::tanh(Var a) {
  check_var(a, "tanh");
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out.at(i) = std::tanh(ta.at(i));
  Var o = emplace(std::move(out), "tanh");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& y = t->nodes_[oid].value;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i) * (1.0 - y.at(i) * y.at(i));
    }
  };
  return o;
}

Var Tape::sigmoid(Var a) {
  check_var(a, "sigmoid");
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) {
    double z = ta.at(i);
    out.at(i) = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                         : std::exp(z) / (1.0 + std::exp(z));
  }
  Var o = emplace(std::move(out), "sigmoid");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& y = t->nodes_[oid].value;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i) * y.at(i) * (1.0 - y.at(i));
    }
  };
  return o;
}

Var Tape::row_softmax(Var a) {
  check_var(a, "row_softmax");
  const Tensor& ta = val(a);
  Tensor out(ta.shape());
  int64_t rows = ta.rows(), cols = ta.cols();
  for (int64_t r = 0; r < rows; ++r) {
    double mx = ta.at(r * cols);
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, ta.at(r * cols + c));
    double denom = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double e = std::exp(ta.at(r * cols + c) - mx);
      out.at(r * cols + c) = e;
      denom += e;
    }
    for (int64_t c = 0; c < cols; ++c) out.at(r * cols + c) /= denom;
  }
  Var o = emplace(std::move(out), "row_softmax");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid, rows, cols](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& y = t->nodes_[oid].value;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int64_t c = 0; c < cols; ++c) {
        dot += g.at(r * cols + c) * y.at(r * cols + c);
      }
      for (int64_t c = 0; c < cols; ++c) {
        ga.at(r * cols + c) +=
            y.at(r * cols + c) * (g.at(r * cols + c) - dot);
      }
    }
  };
  return o;
}

Var Tape::row_l2_normalize(Var a) {
  check_var(a, "row_l2_normalize");
  const Tensor& ta = val(a);
  int64_t rows = ta.rows(), cols = ta.cols();
  Tensor out(ta.shape());
  std::vector<double> norms(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      ss += ta.at(r * cols + c) * ta.at(r * cols + c);
    }
    double n = std::sqrt(ss);
    norms[static_cast<size_t>(r)] = n;
    if (n > 0.0) {
      for (int64_t c = 0; c < cols; ++c) {
        out.at(r * cols + c) = ta.at(r * cols + c) / n;
      }
    }
  }
  Var o = emplace(std::move(out), "row_l2_normalize");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid, rows, cols, norms](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& y = t->nodes_[oid].value;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t r = 0; r < rows; ++r) {
      double n = norms[static_cast<size_t>(r)];
      if (n == 0.0) continue;  // normalized zero row has zero gradient
      double dot = 0.0;
      for (int64_t c = 0; c < cols; ++c) {
        dot += g.at(r * cols + c) * y.at(r * cols + c);
      }
      for (int64_t c = 0; c < cols; ++c) {
        ga.at(r * cols + c) +=
            (g.at(r * cols + c) - y.at(r * cols + c) * dot) / n;
      }
    }
  };
  return o;
}

Var Tape::seq_conv1d(Var x, Var taps) {
  check_var(x, "seq_conv1d");
  check_var(taps, "seq_conv1d");
  const Tensor& tx = val(x);
  const Tensor& tt = val(taps);
  if (tx.ndim() != 2 || tt.ndim() != 2 || tt.dim(1) != tx.dim(1)) {
    shape_error("seq_conv1d", describe(x) + " vs taps " + describe(taps));
  }
  int64_t frames = tx.dim(0), chans = tx.dim(1), span = tt.dim(0);
  if (span % 2 == 0) {
    shape_error("seq_conv1d", "tap count must be odd, got " + describe(taps));
  }
  int64_t radius = (span - 1) / 2;
  Tensor out(tx.shape());
  for (int64_t f = 0; f < frames; ++f) {
    for (int64_t s = 0; s < span; ++s) {
      int64_t src = f + s - radius;
      if (src < 0 || src >= frames) continue;  // zero padding
      for (int64_t c = 0; c < chans; ++c) {
        out.at(f, c) += tt.at(s, c) * tx.at(src, c);
      }
    }
  }
  Var o = emplace(std::move(out), "seq_conv1d");
  int32_t oid = o.id, xid = x.id, tid = taps.id;
  nodes_[oid].backward = [oid, xid, tid, frames, chans, span,
                          radius](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& tx = t->nodes_[xid].value;
    const Tensor& tt = t->nodes_[tid].value;
    Tensor& gx = t->nodes_[xid].grad;
    Tensor& gt = t->nodes_[tid].grad;
    for (int64_t f = 0; f < frames; ++f) {
      for (int64_t s = 0; s < span; ++s) {
        int64_t src = f + s - radius;
        if (src < 0 || src >= frames) continue;
        for (int64_t c = 0; c < chans; ++c) {
          gx.at(src, c) += g.at(f, c) * tt.at(s, c);
          gt.at(s, c) += g.at(f, c) * tx.at(src, c);
        }
      }
    }
  };
  return o;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double epsilon) {
  check_var(x, "layer_norm");
  check_var(gain, "layer_norm");
  check_var(bias, "layer_norm");
  const Tensor& tx = val(x);
  const Tensor& tg = val(gain);
  const Tensor& tb = val(bias);
  if (tx.ndim() != 2 || tg.size() != tx.dim(1) || tb.size() != tx.dim(1)) {
    shape_error("layer_norm", describe(x) + " with gain " + describe(gain) +
                                  " and bias " + describe(bias));
  }
  int64_t rows = tx.dim(0), cols = tx.dim(1);
  Tensor out(tx.shape());
  Tensor normalized(tx.shape());
  std::vector<double> inv_std(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int64_t c = 0; c < cols; ++c) mean += tx.at(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double d = tx.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + epsilon);
    inv_std[static_cast<size_t>(r)] = is;
    for (int64_t c = 0; c < cols; ++c) {
      double z = (tx.at(r, c) - mean) * is;
      normalized.at(r, c) = z;
      out.at(r, c) = tg.at(c) * z + tb.at(c);
    }
  }
  Var o = emplace(std::move(out), "layer_norm");
  int32_t oid = o.id, xid = x.id, gid = gain.id, bid = bias.id;
  nodes_[oid].backward = [oid, xid, gid, bid, rows, cols,
                          normalized = std::move(normalized),
                          inv_std = std::move(inv_std)](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    const Tensor& tg = t->nodes_[gid].value;
    Tensor& gx = t->nodes_[xid].grad;
    Tensor& gg = t->nodes_[gid].grad;
    Tensor& gb = t->nodes_[bid].grad;
    for (int64_t r = 0; r < rows; ++r) {
      double mean_dz = 0.0, mean_dz_z = 0.0;
      for (int64_t c = 0; c < cols; ++c) {
        double dz = g.at(r, c) * tg.at(c);
        mean_dz += dz;
        mean_dz_z += dz * normalized.at(r, c);
        gg.at(c) += g.at(r, c) * normalized.at(r, c);
        gb.at(c) += g.at(r, c);
      }
      mean_dz /= static_cast<double>(cols);
      mean_dz_z /= static_cast<double>(cols);
      double is = inv_std[static_cast<size_t>(r)];
      for (int64_t c = 0; c < cols; ++c) {
        double dz = g.at(r, c) * tg.at(c);
        gx.at(r, c) +=
            (dz - mean_dz - normalized.at(r, c) * mean_dz_z) * is;
      }
    }
  };
  return o;
}

Var Tape::lookup_rows(Var table, std::vector<int64_t> ids) {
  check_var(table, "lookup_rows");
  const Tensor& tt = val(table);
  if (tt.ndim() != 2) {
    shape_error("lookup_rows", "table must be rank 2, got " + describe(table));
  }
  if (ids.empty()) shape_error("lookup_rows", "no row ids given");
  int64_t vocab = tt.dim(0), width = tt.dim(1);
  for (int64_t id : ids) {
    if (id < 0 || id >= vocab) {
      std::ostringstream os;
      os << "lookup_rows: id " << id << " out of range for table "
         << describe(table);
      throw InvalidInput(os.str());
    }
  }
  Tensor out({static_cast<int64_t>(ids.size()), width});
  for (size_t i = 0; i < ids.size(); ++i) {
    for (int64_t c = 0; c < width; ++c) {
      out.at(static_cast<int64_t>(i), c) = tt.at(ids[i], c);
    }
  }
  Var o = emplace(std::move(out), "lookup_rows");
  int32_t oid = o.id, tid = table.id;
  nodes_[oid].backward = [oid, tid, ids = std::move(ids), width](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    Tensor& gt = t->nodes_[tid].grad;
    for (size_t i = 0; i < ids.size(); ++i) {
      for (int64_t c = 0; c < width; ++c) {
        gt.at(ids[i], c) += g.at(static_cast<int64_t>(i), c);
      }
    }
  };
  return o;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) shape_error("concat_cols", "no parts");
  int64_t rows = -1, total = 0;
  for (Var p : parts) {
    check_var(p, "concat_cols");
    const Tensor& tp = val(p);
    if (tp.ndim() != 2) {
      shape_error("concat_cols", "parts must be rank 2, got " + describe(p));
    }
    if (rows < 0) rows = tp.dim(0);
    if (tp.dim(0) != rows) {
      shape_error("concat_cols", "row counts disagree at " + describe(p));
    }
    total += tp.dim(1);
  }
  Tensor out({rows, total});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < tp.dim(1); ++c) {
        out.at(r, off + c) = tp.at(r, c);
      }
    }
    off += tp.dim(1);
  }
  Var o = emplace(std::move(out), "concat_cols");
  std::vector<int32_t> part_ids;
  part_ids.reserve(parts.size());
  for (Var p : parts) part_ids.push_back(p.id);
  int32_t oid = o.id;
  nodes_[oid].backward = [oid, part_ids = std::move(part_ids), rows](Tape* t) {
    const Tensor& g = t->nodes_[oid].grad;
    int64_t off = 0;
    for (int32_t pid : part_ids) {
      Tensor& gp = t->nodes_[pid].grad;
      int64_t w = t->nodes_[pid].value.dim(1);
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < w; ++c) gp.at(r, c) += g.at(r, off + c);
      }
      off += w;
    }
  };
  return o;
}

Var Tape::sum(Var a) {
  check_var(a, "sum");
  const Tensor& ta = val(a);
  double s = 0.0;
  for (int64_t i = 0; i < ta.size(); ++i) s += ta.at(i);
  Var o = emplace(Tensor::scalar(s), "sum");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid](Tape* t) {
    double g = t->nodes_[oid].grad.at(0);
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t i = 0; i < ga.size(); ++i) ga.at(i) += g;
  };
  return o;
}

Var Tape::mean(Var a) {
  check_var(a, "mean");
  const Tensor& ta = val(a);
  double s = 0.0;
  for (int64_t i = 0; i < ta.size(); ++i) s += ta.at(i);
  double inv = 1.0 / static_cast<double>(ta.size());
  Var o = emplace(Tensor::scalar(s * inv), "mean");
  int32_t oid = o.id, aid = a.id;
  nodes_[oid].backward = [oid, aid, inv](Tape* t) {
    double g = t->nodes_[oid].grad.at(0) * inv;
    Tensor& ga = t->nodes_[aid].grad;
    for (int64_t i = 0; i < ga.size(); ++i) ga.at(i) += g;
  };
  return o;
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<int64_t> targets) {
  check_var(logits, "softmax_cross_entropy");
  const Tensor& tl = val(logits);
  if (tl.ndim() != 2) {
    shape_error("softmax_cross_entropy",
                "logits must be rank 2, got " + describe(logits));
  }
  int64_t rows = tl.dim(0), cols = tl.dim(1);
  if (static_cast<int64_t>(targets.size()) != rows) {
    std::ostringstream os;
    os << "softmax_cross_entropy: " << targets.size() << " targets for "
       << rows << " rows";
    throw InvalidInput(os.str());
  }
  for (int64_t y : targets) {
    if (y < 0 || y >= cols) {
      std::ostringstream os;
      os << "softmax_cross_entropy: target class " << y
         << " out of range for " << cols << " classes";
      throw InvalidInput(os.str());
    }
  }
  // Stable log-sum-exp; keep per-row probabilities for the backward pass.
  Tensor probs(tl.shape());
  double loss = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    double mx = tl.at(r, 0);
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, tl.at(r, c));
    double denom = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      double e = std::exp(tl.at(r, c) - mx);
      probs.at(r, c) = e;
      denom += e;
    }
    double lse = mx + std::log(denom);
    loss += lse - tl.at(r, targets[static_cast<size_t>(r)]);
    for (int64_t c = 0; c < cols; ++c) probs.at(r, c) /= denom;
  }
  loss /= static_cast<double>(rows);
  Var o = emplace(Tensor::scalar(loss), "softmax_cross_entropy");
  int32_t oid = o.id, lid = logits.id;
  nodes_[oid].backward = [oid, lid, targets = std::move(targets),
                          probs = std::move(probs), rows, cols](Tape* t) {
    double g = t->nodes_[oid].grad.at(0) / static_cast<double>(rows);
    Tensor& gl = t->nodes_[lid].grad;
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) {
        double delta = (c == targets[static_cast<size_t>(r)]) ? 1.0 : 0.0;
        gl.at(r, c) += g * (probs.at(r, c) - delta);
      }
    }
  };
  return o;
}

Var Tape::sigmoid_binary_cross_entropy(Var logits, Tensor targets) {
  check_var(logits, "sigmoid_binary_cross_entropy");
  const Tensor& tl = val(logits);
  if (!tl.same_shape(targets)) {
    shape_error("sigmoid_binary_cross_entropy",
                describe(logits) + " vs targets (" + targets.shape_str() + ")");
  }
  for (int64_t i = 0; i < targets.size(); ++i) {
    if (targets.at(i) < 0.0 || targets.at(i) > 1.0) {
      throw InvalidInput(
          "sigmoid_binary_cross_entropy: targets must lie in [0, 1]");
    }
  }
  int64_t count = tl.size();
  double loss = 0.0;
  for (int64_t i = 0; i < count; ++i) {
    double z = tl.at(i), y = targets.at(i);
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= static_cast<double>(count);
  Var o = emplace(Tensor::scalar(loss), "sigmoid_binary_cross_entropy");
  int32_t oid = o.id, lid = logits.id;
  nodes_[oid].backward = [oid, lid, targets = std::move(targets),
                          count](Tape* t) {
    double g = t->nodes_[oid].grad.at(0) / static_cast<double>(count);
    const Tensor& tl = t->nodes_[lid].value;
    Tensor& gl = t->nodes_[lid].grad;
    for (int64_t i = 0; i < count; ++i) {
      double z = tl.at(i);
      double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
      gl.at(i) += g * (p - targets.at(i));
    }
  };
  return o;
}

double Tape::backward(Var loss) {
  check_var(loss, "backward");
  const Tensor& lv = val(loss);
  if (lv.size() != 1) {
    shape_error("backward", "loss node " + describe(loss) + " is not scalar");
  }
  for (size_t i = 0; i <= static_cast<size_t>(loss.id); ++i) {
    nodes_[i].grad = Tensor(nodes_[i].value.shape());
  }
  nodes_[static_cast<size_t>(loss.id)].grad.at(0) = 1.0;
  for (int32_t i = loss.id; i >= 0; --i) {
    if (nodes_[static_cast<size_t>(i)].backward) {
      nodes_[static_cast<size_t>(i)].backward(this);
    }
  }
  for (const Binding& b : bindings_) {
    if (b.node > loss.id) continue;
    const Tensor& g = nodes_[static_cast<size_t>(b.node)].grad;
    for (int64_t i = 0; i < g.size(); ++i) b.param->grad.at(i) += g.at(i);
  }
  return lv.at(0);
}

double forward_backward(Tape& tape, Var loss) { return tape.backward(loss); }

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("softmax: empty logit vector");
  double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw InvalidInput("softmax: non-finite logits");
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

double cross_entropy(std::span<const double> probabilities, int64_t target) {
  if (target < 0 || target >= static_cast<int64_t>(probabilities.size())) {
    std::ostringstream os;
    os << "cross_entropy: target " << target << " out of range for "
       << probabilities.size() << " classes";
    throw InvalidInput(os.str());
  }
  double p = probabilities[static_cast<size_t>(target)];
  if (p < 0.0 || p > 1.0 + 1e-9) {
    throw InvalidInput("cross_entropy: not a probability vector");
  }
  return -std::log(p);
}

}  // namespace send
