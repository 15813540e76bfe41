#include "sen/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace sen {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
  }
}

double stable_logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Tape::check_open() const {
  if (consumed_) throw ContractError("tape already consumed by backward()");
}

void Tape::check_ref(Ref r) const {
  if (!r.valid() || r.idx >= (int)nodes_.size()) throw ContractError("invalid tape ref");
}

Tape::Ref Tape::push(Tensor value, std::function<void(Tape&, int)> back) {
  check_open();
  nodes_.push_back(Node{std::move(value), {}, std::move(back), nullptr});
  return Ref{(int)nodes_.size() - 1};
}

void Tape::ensure_adj(int idx) {
  Node& n = nodes_[(size_t)idx];
  if (n.adj.empty()) n.adj.assign(n.value.values.size(), 0.0);
}

std::vector<double>& Tape::adj(int idx) {
  ensure_adj(idx);
  return nodes_[(size_t)idx].adj;
}

Tape::Ref Tape::input(Tensor t) { return push(std::move(t), nullptr); }

Tape::Ref Tape::input(Shape shape, std::vector<double> values) {
  return input(Tensor(std::move(shape), std::move(values)));
}

Tape::Ref Tape::param(Tensor& p) {
  check_open();
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Ref{it->second};
  Ref r = push(p, nullptr);
  nodes_[(size_t)r.idx].bound = &p;
  param_nodes_[&p] = r.idx;
  return r;
}

const Tensor& Tape::val(Ref r) const {
  check_ref(r);
  return nodes_[(size_t)r.idx].value;
}

double Tape::scalar_val(Ref r) const {
  const Tensor& t = val(r);
  if (!t.is_scalar()) throw ContractError("scalar_val: tensor has size " + std::to_string(t.size()));
  return t.values[0];
}

Tape::Ref Tape::add(Ref a, Ref b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_same_shape(ta, tb, "add");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out[i] += tb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    auto& ga = t.adj(a.idx);
    auto& gb = t.adj(b.idx);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Tape::Ref Tape::sub(Ref a, Ref b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_same_shape(ta, tb, "sub");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out[i] -= tb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    auto& ga = t.adj(a.idx);
    auto& gb = t.adj(b.idx);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

Tape::Ref Tape::mul(Ref a, Ref b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_same_shape(ta, tb, "mul");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out[i] *= tb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    const auto& va = t.node_val(a.idx).values;
    const auto& vb = t.node_val(b.idx).values;
    auto& ga = t.adj(a.idx);
    auto& gb = t.adj(b.idx);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  });
}

Tape::Ref Tape::scale(Ref a, double c) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] *= c;
  return push(std::move(out), [a, c](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Tape::Ref Tape::sum(Ref a) {
  const Tensor& ta = val(a);
  double acc = 0.0;
  for (double v : ta.values) acc += v;
  return push(Tensor::scalar(acc), [a](Tape& t, int self) {
    const double g = t.nodes_[(size_t)self].adj[0];
    auto& ga = t.adj(a.idx);
    for (double& v : ga) v += g;
  });
}

Tape::Ref Tape::mean_of(std::span<const Ref> xs) {
  if (xs.empty()) throw ContractError("mean_of: empty list");
  const Tensor& first = val(xs[0]);
  Tensor out = Tensor::zeros(first.shape);
  for (Ref r : xs) {
    const Tensor& t = val(r);
    require_same_shape(first, t, "mean_of");
    for (int i = 0; i < out.size(); ++i) out[i] += t[i];
  }
  const double inv = 1.0 / (double)xs.size();
  for (int i = 0; i < out.size(); ++i) out[i] *= inv;
  std::vector<Ref> parents(xs.begin(), xs.end());
  return push(std::move(out), [parents, inv](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    for (Ref p : parents) {
      auto& gp = t.adj(p.idx);
      for (size_t i = 0; i < g.size(); ++i) gp[i] += inv * g[i];
    }
  });
}

Tape::Ref Tape::concat(std::span<const Ref> xs) {
  if (xs.empty()) throw ContractError("concat: empty list");
  int total = 0;
  for (Ref r : xs) total += val(r).size();
  Tensor out = Tensor::zeros({total});
  int off = 0;
  for (Ref r : xs) {
    const Tensor& t = val(r);
    std::copy(t.values.begin(), t.values.end(), out.values.begin() + off);
    off += t.size();
  }
  std::vector<Ref> parents(xs.begin(), xs.end());
  return push(std::move(out), [parents](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    size_t off = 0;
    for (Ref p : parents) {
      auto& gp = t.adj(p.idx);
      for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
}

Tape::Ref Tape::slice(Ref a, int offset, int len) {
  const Tensor& ta = val(a);
  if (offset < 0 || len <= 0 || offset + len > ta.size()) {
    throw DimensionError("slice: [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                         ") out of range for size " + std::to_string(ta.size()));
  }
  Tensor out({len}, std::vector<double>(ta.values.begin() + offset, ta.values.begin() + offset + len));
  return push(std::move(out), [a, offset](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) ga[(size_t)offset + i] += g[i];
  });
}

Tape::Ref Tape::stack_rows(std::span<const Ref> xs) {
  if (xs.empty()) throw ContractError("stack_rows: empty list");
  const Tensor& first = val(xs[0]);
  if (first.shape.size() != 3) {
    throw DimensionError("stack_rows: expected rank-3 tensors, got " + shape_str(first.shape));
  }
  const int C = first.shape[0];
  const int W = first.shape[2];
  int H = 0;
  for (Ref r : xs) {
    const Tensor& t = val(r);
    if (t.shape.size() != 3 || t.shape[0] != C || t.shape[2] != W) {
      throw DimensionError("stack_rows: incompatible block " + shape_str(t.shape) + " vs " +
                           shape_str(first.shape));
    }
    H += t.shape[1];
  }
  Tensor out = Tensor::zeros({C, H, W});
  int hoff = 0;
  for (Ref r : xs) {
    const Tensor& t = val(r);
    const int h = t.shape[1];
    for (int c = 0; c < C; ++c) {
      for (int row = 0; row < h; ++row) {
        std::copy(t.values.begin() + ((size_t)c * h + row) * W,
                  t.values.begin() + ((size_t)c * h + row + 1) * W,
                  out.values.begin() + ((size_t)c * H + hoff + row) * W);
      }
    }
    hoff += h;
  }
  std::vector<Ref> parents(xs.begin(), xs.end());
  return push(std::move(out), [parents, C, H, W](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    int hoff = 0;
    for (Ref p : parents) {
      auto& gp = t.adj(p.idx);
      const int h = t.node_val(p.idx).shape[1];
      for (int c = 0; c < C; ++c) {
        for (int row = 0; row < h; ++row) {
          const size_t src = ((size_t)c * H + hoff + row) * W;
          const size_t dst = ((size_t)c * h + row) * W;
          for (int w = 0; w < W; ++w) gp[dst + w] += g[src + w];
        }
      }
      hoff += h;
    }
  });
}

Tape::Ref Tape::reshape(Ref a, Shape s) {
  const Tensor& ta = val(a);
  if (shape_size(s) != ta.size()) {
    throw DimensionError("reshape: " + shape_str(ta.shape) + " to " + shape_str(s));
  }
  Tensor out(std::move(s), ta.values);
  return push(std::move(out), [a](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tape::Ref Tape::matvec(Ref W, Ref x) {
  const Tensor& tw = val(W);
  const Tensor& tx = val(x);
  if (tw.shape.size() != 2) throw DimensionError("matvec: W must be a matrix, got " + shape_str(tw.shape));
  const int m = tw.shape[0], n = tw.shape[1];
  if (tx.size() != n) {
    throw DimensionError("matvec: inner axis " + std::to_string(n) + " vs x length " +
                         std::to_string(tx.size()));
  }
  Tensor out = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* wrow = tw.values.data() + (size_t)i * n;
    for (int j = 0; j < n; ++j) acc += wrow[j] * tx[j];
    out[i] = acc;
  }
  return push(std::move(out), [W, x, m, n](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    const auto& vw = t.node_val(W.idx).values;
    const auto& vx = t.node_val(x.idx).values;
    auto& gw = t.adj(W.idx);
    auto& gx = t.adj(x.idx);
    for (int i = 0; i < m; ++i) {
      const double gi = g[(size_t)i];
      if (gi == 0.0) continue;
      const size_t row = (size_t)i * n;
      for (int j = 0; j < n; ++j) {
        gw[row + j] += gi * vx[(size_t)j];
        gx[(size_t)j] += gi * vw[row + j];
      }
    }
  });
}

Tape::Ref Tape::dense(Ref W, Ref x, Ref b) {
  const Tensor& tw = val(W);
  const Tensor& tb = val(b);
  if (tw.shape.size() != 2) throw DimensionError("dense: W must be a matrix, got " + shape_str(tw.shape));
  if (tb.size() != tw.shape[0]) {
    throw DimensionError("dense: bias length " + std::to_string(tb.size()) + " vs output axis " +
                         std::to_string(tw.shape[0]));
  }
  return add(matvec(W, x), b);
}

Tape::Ref Tape::conv1d(Ref in, Ref filt, Ref bias) {
  const Tensor& ti = val(in);
  const Tensor& tf = val(filt);
  const Tensor& tb = val(bias);
  if (ti.shape.size() != 3) throw DimensionError("conv1d: input must be rank 3, got " + shape_str(ti.shape));
  if (tf.shape.size() != 4) throw DimensionError("conv1d: filters must be rank 4, got " + shape_str(tf.shape));
  const int Cin = ti.shape[0], H = ti.shape[1], W = ti.shape[2];
  const int Cout = tf.shape[0], FC = tf.shape[1], FH = tf.shape[2], FW = tf.shape[3];
  if (FC != Cin) {
    throw DimensionError("conv1d: channels_in axis mismatch, input has " + std::to_string(Cin) +
                         " channels but filters expect " + std::to_string(FC));
  }
  if (FH > H) {
    throw DimensionError("conv1d: filter height " + std::to_string(FH) + " exceeds input height " +
                         std::to_string(H));
  }
  if (FW > W) {
    throw DimensionError("conv1d: filter width " + std::to_string(FW) + " exceeds input width " +
                         std::to_string(W));
  }
  if (tb.size() != Cout) {
    throw DimensionError("conv1d: bias length " + std::to_string(tb.size()) + " vs channels_out " +
                         std::to_string(Cout));
  }
  const int OH = H - FH + 1, OW = W - FW + 1;
  Tensor out = Tensor::zeros({Cout, OH, OW});
  const double* iv = ti.values.data();
  const double* fv = tf.values.data();
  double* ov = out.values.data();
  for (int co = 0; co < Cout; ++co) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        double acc = tb[co];
        for (int ci = 0; ci < Cin; ++ci) {
          for (int fh = 0; fh < FH; ++fh) {
            const double* irow = iv + ((size_t)ci * H + oh + fh) * W + ow;
            const double* frow = fv + (((size_t)co * Cin + ci) * FH + fh) * FW;
            for (int fw = 0; fw < FW; ++fw) acc += irow[fw] * frow[fw];
          }
        }
        ov[((size_t)co * OH + oh) * OW + ow] = acc;
      }
    }
  }
  return push(std::move(out), [in, filt, bias, Cin, H, W, Cout, FH, FW, OH, OW](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    const auto& iv = t.node_val(in.idx).values;
    const auto& fv = t.node_val(filt.idx).values;
    auto& gi = t.adj(in.idx);
    auto& gf = t.adj(filt.idx);
    auto& gb = t.adj(bias.idx);
    for (int co = 0; co < Cout; ++co) {
      for (int oh = 0; oh < OH; ++oh) {
        for (int ow = 0; ow < OW; ++ow) {
          const double go = g[((size_t)co * OH + oh) * OW + ow];
          if (go == 0.0) continue;
          gb[(size_t)co] += go;
          for (int ci = 0; ci < Cin; ++ci) {
            for (int fh = 0; fh < FH; ++fh) {
              const size_t ibase = ((size_t)ci * H + oh + fh) * W + ow;
              const size_t fbase = (((size_t)co * Cin + ci) * FH + fh) * FW;
              for (int fw = 0; fw < FW; ++fw) {
                gf[fbase + fw] += go * iv[ibase + fw];
                gi[ibase + fw] += go * fv[fbase + fw];
              }
            }
          }
        }
      }
    }
  });
}

Tape::Ref Tape::relu(Ref a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return push(std::move(out), [a](Tape& t, int self) {
    const auto& g = t.nodes_[(size_t)self].adj;
    const auto& va = t.node_val(a.idx).values;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) {
      if (va[i] > 0.0) ga[i] += g[i];
    }
  });
}

Tape::Ref Tape::tanh_op(Ref a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Node& n = t.nodes_[(size_t)self];
    const auto& g = n.adj;
    const auto& y = n.value.values;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Tape::Ref Tape::logistic(Ref a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] = stable_logistic(out[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Node& n = t.nodes_[(size_t)self];
    const auto& g = n.adj;
    const auto& y = n.value.values;
    auto& ga = t.adj(a.idx);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Tape::Ref Tape::softmax(Ref a) {
  const Tensor& ta = val(a);
  if (ta.shape.empty() || ta.shape.back() < 1) {
    throw DimensionError("softmax: needs a non-empty final axis, got " + shape_str(ta.shape));
  }
  const int n = ta.shape.back();
  const int rows = ta.size() / n;
  Tensor out = ta;
  for (int r = 0; r < rows; ++r) {
    double* row = out.values.data() + (size_t)r * n;
    double mx = row[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      row[i] = std::exp(row[i] - mx);
      z += row[i];
    }
    for (int i = 0; i < n; ++i) row[i] /= z;
  }
  return push(std::move(out), [a, n, rows](Tape& t, int self) {
    const Node& nd = t.nodes_[(size_t)self];
    const auto& g = nd.adj;
    const auto& y = nd.value.values;
    auto& ga = t.adj(a.idx);
    for (int r = 0; r < rows; ++r) {
      const size_t base = (size_t)r * n;
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += g[base + i] * y[base + i];
      for (int i = 0; i < n; ++i) ga[base + i] += y[base + i] * (g[base + i] - dot);
    }
  });
}

Tape::Ref Tape::cosine(Ref a, Ref b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_same_shape(ta, tb, "cosine");
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (int i = 0; i < ta.size(); ++i) {
    dot += ta[i] * tb[i];
    na2 += ta[i] * ta[i];
    nb2 += tb[i] * tb[i];
  }
  if (na2 == 0.0 || nb2 == 0.0) throw NumericError("cosine: degenerate zero-norm embedding");
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double phi = dot / (na * nb);
  return push(Tensor::scalar(phi), [a, b, na, nb, phi](Tape& t, int self) {
    const double g = t.nodes_[(size_t)self].adj[0];
    const auto& va = t.node_val(a.idx).values;
    const auto& vb = t.node_val(b.idx).values;
    auto& ga = t.adj(a.idx);
    auto& gb = t.adj(b.idx);
    const double inv = 1.0 / (na * nb);
    for (size_t i = 0; i < va.size(); ++i) {
      ga[i] += g * (vb[i] * inv - phi * va[i] / (na * na));
      gb[i] += g * (va[i] * inv - phi * vb[i] / (nb * nb));
    }
  });
}

Tape::Ref Tape::pairwise_nll(Ref phis, const std::vector<int>& s, double steepness) {
  const Tensor& tp = val(phis);
  if ((int)s.size() != tp.size()) {
    throw ContractError("pairwise_nll: " + std::to_string(tp.size()) + " similarities vs " +
                        std::to_string(s.size()) + " indicators");
  }
  if (steepness <= 0.0) throw ContractError("pairwise_nll: steepness must be positive");
  double J = 0.0;
  for (int i = 0; i < tp.size(); ++i) {
    const double z = steepness * tp[i];
    J += std::max(z, 0.0) - (double)s[(size_t)i] * z + std::log1p(std::exp(-std::abs(z)));
  }
  return push(Tensor::scalar(J), [phis, s, steepness](Tape& t, int self) {
    const double g = t.nodes_[(size_t)self].adj[0];
    const auto& vp = t.node_val(phis.idx).values;
    auto& gp = t.adj(phis.idx);
    for (size_t i = 0; i < vp.size(); ++i) {
      const double z = steepness * vp[i];
      gp[i] += g * steepness * (stable_logistic(z) - (double)s[i]);
    }
  });
}

Tape::Ref Tape::softmax_xent(Ref logits, int label) {
  const Tensor& tl = val(logits);
  if (tl.shape.size() != 1) throw DimensionError("softmax_xent: logits must be a vector");
  const int n = tl.size();
  if (label < 0 || label >= n) throw ContractError("softmax_xent: label out of range");
  double mx = tl[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, tl[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(tl[i] - mx);
  const double loss = mx + std::log(z) - tl[label];
  return push(Tensor::scalar(loss), [logits, label, mx, z](Tape& t, int self) {
    const double g = t.nodes_[(size_t)self].adj[0];
    const auto& vl = t.node_val(logits.idx).values;
    auto& gl = t.adj(logits.idx);
    for (size_t i = 0; i < vl.size(); ++i) {
      const double p = std::exp(vl[i] - mx) / z;
      gl[i] += g * (p - ((int)i == label ? 1.0 : 0.0));
    }
  });
}

void Tape::backward(Ref loss) {
  check_open();
  check_ref(loss);
  const Tensor& lt = nodes_[(size_t)loss.idx].value;
  if (!lt.is_scalar()) {
    throw ContractError("backward: loss must be scalar, got " + shape_str(lt.shape));
  }
  ensure_adj(loss.idx);
  nodes_[(size_t)loss.idx].adj[0] = 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[(size_t)i];
    if (n.adj.empty() || !n.back) continue;
    n.back(*this, i);
  }
  for (auto& [p, idx] : param_nodes_) {
    Node& n = nodes_[(size_t)idx];
    Tensor* bound = n.bound;
    if (!bound->requires_grad || n.adj.empty()) continue;
    if (bound->grad.size() != bound->values.size()) bound->grad.assign(bound->values.size(), 0.0);
    for (size_t i = 0; i < n.adj.size(); ++i) bound->grad[i] += n.adj[i];
  }
  nodes_.clear();
  param_nodes_.clear();
  consumed_ = true;
}

std::pair<Tape::Ref, Tape::Ref> lstm_step(Tape& t, Tape::Ref x, Tape::Ref h, Tape::Ref c,
                                          const LstmRefs& w, int hid) {
  const Tensor& tw = t.val(w.W);
  if (tw.shape.size() != 2 || tw.shape[0] != 4 * hid) {
    throw DimensionError("lstm_step: packed gate matrix must have 4*hid rows, got " +
                         shape_str(tw.shape));
  }
  if (t.val(h).size() != hid || t.val(c).size() != hid) {
    throw DimensionError("lstm_step: state length vs hidden size " + std::to_string(hid));
  }
  Tape::Ref z = t.add(t.dense(w.W, x, w.b), t.matvec(w.U, h));
  Tape::Ref gi = t.logistic(t.slice(z, 0, hid));
  Tape::Ref gf = t.logistic(t.slice(z, hid, hid));
  Tape::Ref gg = t.tanh_op(t.slice(z, 2 * hid, hid));
  Tape::Ref go = t.logistic(t.slice(z, 3 * hid, hid));
  Tape::Ref c_next = t.add(t.mul(gf, c), t.mul(gi, gg));
  Tape::Ref h_next = t.mul(go, t.tanh_op(c_next));
  return {h_next, c_next};
}

}  // namespace sen
