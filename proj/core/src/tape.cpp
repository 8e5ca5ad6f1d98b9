#include "gekln/tape.hpp"

#include "gekln/error.hpp"

#include <cmath>
#include <memory>

namespace gekln {

SegmentIndex SegmentIndex::from_segment_ids(std::span<const std::size_t> ids, std::size_t num_segments) {
  SegmentIndex out;
  out.offsets.assign(num_segments + 1, 0);
  for (std::size_t id : ids) {
    if (id >= num_segments) throw IndexOutOfRange("segment id " + std::to_string(id) + " >= " + std::to_string(num_segments));
    ++out.offsets[id + 1];
  }
  for (std::size_t g = 0; g < num_segments; ++g) out.offsets[g + 1] += out.offsets[g];
  out.members.resize(ids.size());
  std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (std::size_t i = 0; i < ids.size(); ++i) out.members[cursor[ids[i]]++] = i;
  return out;
}

}  // namespace gekln

namespace gekln::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(ParameterStore& store, ParameterStore::SlotId slot) {
  const auto key = std::make_pair(static_cast<const ParameterStore*>(&store), slot);
  if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return {this, it->second};
  Node node;
  node.value = store.value(slot);
  node.requires_grad = true;
  node.store = &store;
  node.slot = slot;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(key, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (std::size_t in : inputs) node.requires_grad = node.requires_grad || nodes_.at(in).requires_grad;
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty() || loss.tape != this || loss.id >= nodes_.size()) throw NoTrace();
  if (value(loss.id).size() != 1) throw ShapeMismatch("backward needs a scalar loss, got " + shape_string(value(loss.id)));
  grad(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.store != nullptr) n.store->grad(n.slot) += n.grad;
  }
  clear();
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + " " + shape_string(a) + " vs " + shape_string(b));
  }
}

bool wants(Tape& t, std::size_t id) { return t.requires_grad(id); }

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeMismatch("matmul " + shape_string(av) + " * " + shape_string(bv));
  Matrix out = av * bv;
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (wants(t, ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia) += g;
    if (wants(t, ib)) t.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia) += g;
    if (wants(t, ib)) t.grad(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "mul");
  const std::size_t ia = a.id, ib = b.id;
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
    if (wants(t, ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(Var a, double factor) {
  const std::size_t ia = a.id;
  return a.tape->record(a.value() * factor, {ia}, [ia, factor](Tape& t, std::size_t self) {
    t.grad(ia) += t.grad(self) * factor;
  });
}

Var leaky_relu(Var a, double slope) {
  const std::size_t ia = a.id;
  Matrix out = a.value().unaryExpr([slope](double x) { return x >= 0.0 ? x : slope * x; });
  return a.tape->record(std::move(out), {ia}, [ia, slope](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ia);
    Matrix& ga = t.grad(ia);
    for (Eigen::Index i = 0; i < x.size(); ++i) ga.data()[i] += x.data()[i] >= 0.0 ? g.data()[i] : slope * g.data()[i];
  });
}

Var row_gather(Var a, std::span<const std::size_t> rows) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(av.rows())) {
      throw IndexOutOfRange("row_gather index " + std::to_string(rows[r]) + " on " + shape_string(av));
    }
    out.row(static_cast<Eigen::Index>(r)) = av.row(static_cast<Eigen::Index>(rows[r]));
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, idx](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ia);
    for (std::size_t r = 0; r < idx->size(); ++r) {
      ga.row(static_cast<Eigen::Index>((*idx)[r])) += g.row(static_cast<Eigen::Index>(r));
    }
  });
}

Var gather_segment_mean(Var a, const SegmentIndex& segments) {
  const Matrix& av = a.value();
  const std::size_t n_seg = segments.num_segments();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n_seg), av.cols());
  for (std::size_t g = 0; g < n_seg; ++g) {
    const auto members = segments.segment(g);
    if (members.empty()) continue;
    auto row = out.row(static_cast<Eigen::Index>(g));
    for (std::size_t m : members) {
      if (m >= static_cast<std::size_t>(av.rows())) {
        throw IndexOutOfRange("segment member " + std::to_string(m) + " on " + shape_string(av));
      }
      row += av.row(static_cast<Eigen::Index>(m));
    }
    row /= static_cast<double>(members.size());
  }
  auto seg = std::make_shared<SegmentIndex>(segments);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, seg](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ia);
    for (std::size_t s = 0; s < seg->num_segments(); ++s) {
      const auto members = seg->segment(s);
      if (members.empty()) continue;
      const double w = 1.0 / static_cast<double>(members.size());
      for (std::size_t m : members) ga.row(static_cast<Eigen::Index>(m)) += w * g.row(static_cast<Eigen::Index>(s));
    }
  });
}

Var segment_mean(Var values, std::span<const std::size_t> segment_ids, std::size_t num_segments) {
  if (segment_ids.size() != static_cast<std::size_t>(values.rows())) {
    throw ShapeMismatch("segment_mean ids " + std::to_string(segment_ids.size()) + " for " + shape_string(values.value()));
  }
  return gather_segment_mean(values, SegmentIndex::from_segment_ids(segment_ids, num_segments));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols of nothing");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeMismatch("concat_cols " + shape_string(parts.front().value()) + " vs " + shape_string(p.value()));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    ids.push_back(p.id);
  }
  return parts.front().tape->record(std::move(out), ids, [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Eigen::Index col = 0;
    for (std::size_t id : ids) {
      const Eigen::Index w = t.value(id).cols();
      if (wants(t, id)) t.grad(id) += g.middleCols(col, w);
      col += w;
    }
  });
}

Var inner_product_rows(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "inner_product_rows");
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia) += g.col(0).asDiagonal() * t.value(ib);
    if (wants(t, ib)) t.grad(ib) += g.col(0).asDiagonal() * t.value(ia);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
}

namespace {

void check_column(const Matrix& m, std::size_t n, const char* op) {
  if (m.cols() != 1 || static_cast<std::size_t>(m.rows()) != n) {
    throw ShapeMismatch(std::string(op) + " " + shape_string(m) + " against " + std::to_string(n) + " labels");
  }
  if (n == 0) throw ShapeMismatch(std::string(op) + " on an empty batch");
}

}  // namespace

Var mean_squared_error(Var pred, std::span<const double> labels) {
  const Matrix& p = pred.value();
  check_column(p, labels.size(), "mean_squared_error");
  const auto n = static_cast<double>(labels.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double r = labels[i] - p(static_cast<Eigen::Index>(i), 0);
    acc += r * r;
  }
  Matrix out(1, 1);
  out(0, 0) = acc / n;
  auto y = std::make_shared<std::vector<double>>(labels.begin(), labels.end());
  const std::size_t ip = pred.id;
  return pred.tape->record(std::move(out), {ip}, [ip, y](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    const Matrix& p = t.value(ip);
    Matrix& gp = t.grad(ip);
    const double k = 2.0 * g / static_cast<double>(y->size());
    for (std::size_t i = 0; i < y->size(); ++i) {
      gp(static_cast<Eigen::Index>(i), 0) += k * (p(static_cast<Eigen::Index>(i), 0) - (*y)[i]);
    }
  });
}

Var bce_with_logits(Var logits, std::span<const double> labels) {
  const Matrix& z = logits.value();
  check_column(z, labels.size(), "bce_with_logits");
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = z(static_cast<Eigen::Index>(i), 0);
    // log(1 + e^x) - y x, evaluated without overflow
    acc += std::max(x, 0.0) - x * labels[i] + std::log1p(std::exp(-std::abs(x)));
  }
  Matrix out(1, 1);
  out(0, 0) = acc / static_cast<double>(labels.size());
  auto y = std::make_shared<std::vector<double>>(labels.begin(), labels.end());
  const std::size_t iz = logits.id;
  return logits.tape->record(std::move(out), {iz}, [iz, y](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0) / static_cast<double>(y->size());
    const Matrix& z = t.value(iz);
    Matrix& gz = t.grad(iz);
    for (std::size_t i = 0; i < y->size(); ++i) {
      const double x = z(static_cast<Eigen::Index>(i), 0);
      gz(static_cast<Eigen::Index>(i), 0) += g * (1.0 / (1.0 + std::exp(-x)) - (*y)[i]);
    }
  });
}

}  // namespace gekln::ad
