#include "rasa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rasa/errors.hpp"

namespace rasa {

namespace {

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeMismatch("negative dimension");
        n *= d;
    }
    return n;
}

void require(bool cond, const std::string& what) {
    if (!cond) throw ShapeMismatch(what);
}

double sigmoid_scalar(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    t.values.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.values.begin(), t.values.end(), v);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.shape = {};
    t.values = {v};
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    if (shape_size(shape) != static_cast<std::int64_t>(values.size())) {
        throw ShapeMismatch("value count does not match shape");
    }
    Tensor t;
    t.shape = std::move(shape);
    t.values = std::move(values);
    return t;
}

double Tensor::item() const {
    require(values.size() == 1, "item() requires a single-element tensor");
    return values[0];
}

bool Tensor::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
    return t;
}

// --- tape ----------------------------------------------------------------

Tape::Node& Tape::node(Value v) {
    if (!v.valid() || v.index_ >= static_cast<int>(nodes_.size())) {
        throw Error("value does not belong to this tape");
    }
    return nodes_[static_cast<std::size_t>(v.index_)];
}

const Tape::Node& Tape::node(Value v) const {
    if (!v.valid() || v.index_ >= static_cast<int>(nodes_.size())) {
        throw Error("value does not belong to this tape");
    }
    return nodes_[static_cast<std::size_t>(v.index_)];
}

Value Tape::push(Tensor value, std::function<void()> back, Parameter* p) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    n.parameter = p;
    nodes_.push_back(std::move(n));
    return Value(static_cast<int>(nodes_.size()) - 1);
}

Value Tape::constant(Tensor t) { return push(std::move(t)); }

Value Tape::param(Parameter& p) { return push(p.tensor, {}, &p); }

Value Tape::matmul(Value a, Value b) {
    {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        require(A.shape.size() == 2 && B.shape.size() == 2, "matmul needs rank-2 operands");
        require(A.shape[1] == B.shape[0], "matmul inner dimensions disagree");
    }
    const int ai = a.index_, bi = b.index_;
    const Tensor& A = nodes_[ai].value;
    const Tensor& B = nodes_[bi].value;
    const int n = A.shape[0], k = A.shape[1], m = B.shape[1];
    Tensor C = Tensor::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        const double* arow = A.values.data() + static_cast<std::size_t>(i) * k;
        double* crow = C.values.data() + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = B.values.data() + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, bi, oi, n, k, m] {
        const double* dC = nodes_[oi].grad.values.data();
        const double* Av = nodes_[ai].value.values.data();
        const double* Bv = nodes_[bi].value.values.data();
        double* dA = nodes_[ai].grad.values.data();
        double* dB = nodes_[bi].grad.values.data();
        // dA += dC . B^T
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const double dc = dC[static_cast<std::size_t>(i) * m + j];
                if (dc == 0.0) continue;
                const double* brow = Bv;  // column j walked down rows
                for (int p = 0; p < k; ++p) {
                    dA[static_cast<std::size_t>(i) * k + p] +=
                        dc * brow[static_cast<std::size_t>(p) * m + j];
                }
            }
        }
        // dB += A^T . dC
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < k; ++p) {
                const double av = Av[static_cast<std::size_t>(i) * k + p];
                if (av == 0.0) continue;
                for (int j = 0; j < m; ++j) {
                    dB[static_cast<std::size_t>(p) * m + j] +=
                        av * dC[static_cast<std::size_t>(i) * m + j];
                }
            }
        }
    };
    return out;
}

Value Tape::matmul_nt(Value a, Value b) {
    {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        require(A.shape.size() == 2 && B.shape.size() == 2, "matmul_nt needs rank-2 operands");
        require(A.shape[1] == B.shape[1], "matmul_nt inner dimensions disagree");
    }
    const int ai = a.index_, bi = b.index_;
    const Tensor& A = nodes_[ai].value;
    const Tensor& B = nodes_[bi].value;
    const int n = A.shape[0], k = A.shape[1], m = B.shape[0];
    Tensor C = Tensor::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        const double* arow = A.values.data() + static_cast<std::size_t>(i) * k;
        double* crow = C.values.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* brow = B.values.data() + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, bi, oi, n, k, m] {
        const double* dC = nodes_[oi].grad.values.data();
        const double* Av = nodes_[ai].value.values.data();
        const double* Bv = nodes_[bi].value.values.data();
        double* dA = nodes_[ai].grad.values.data();
        double* dB = nodes_[bi].grad.values.data();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const double dc = dC[static_cast<std::size_t>(i) * m + j];
                if (dc == 0.0) continue;
                const double* brow = Bv + static_cast<std::size_t>(j) * k;
                const double* arow = Av + static_cast<std::size_t>(i) * k;
                double* darow = dA + static_cast<std::size_t>(i) * k;
                double* dbrow = dB + static_cast<std::size_t>(j) * k;
                for (int p = 0; p < k; ++p) {
                    darow[p] += dc * brow[p];
                    dbrow[p] += dc * arow[p];
                }
            }
        }
    };
    return out;
}

Value Tape::add(Value a, Value b) {
    require(value(a).same_shape(value(b)), "add shapes disagree");
    const int ai = a.index_, bi = b.index_;
    Tensor C = nodes_[ai].value;
    const Tensor& B = nodes_[bi].value;
    for (std::size_t i = 0; i < C.values.size(); ++i) C.values[i] += B.values[i];
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, bi, oi] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dA = nodes_[ai].grad;
        Tensor& dB = nodes_[bi].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) {
            dA.values[i] += dC.values[i];
            dB.values[i] += dC.values[i];
        }
    };
    return out;
}

Value Tape::add_broadcast(Value m, Value row) {
    {
        const Tensor& M = value(m);
        const Tensor& R = value(row);
        require(M.shape.size() == 2, "add_broadcast matrix must be rank 2");
        require(static_cast<int>(R.values.size()) == M.shape[1],
                "add_broadcast row length must equal matrix columns");
    }
    const int mi = m.index_, ri = row.index_;
    const Tensor& M = nodes_[mi].value;
    const Tensor& R = nodes_[ri].value;
    const int n = M.shape[0], d = M.shape[1];
    Tensor C = M;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) C.values[static_cast<std::size_t>(i) * d + j] += R.values[j];
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, mi, ri, oi, n, d] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dM = nodes_[mi].grad;
        Tensor& dR = nodes_[ri].grad;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                const double g = dC.values[static_cast<std::size_t>(i) * d + j];
                dM.values[static_cast<std::size_t>(i) * d + j] += g;
                dR.values[j] += g;
            }
        }
    };
    return out;
}

Value Tape::add_row_at(Value m, int row, Value vec) {
    {
        const Tensor& M = value(m);
        const Tensor& V = value(vec);
        require(M.shape.size() == 2, "add_row_at matrix must be rank 2");
        require(row >= 0 && row < M.shape[0], "add_row_at row out of range");
        require(static_cast<int>(V.values.size()) == M.shape[1],
                "add_row_at vector length must equal matrix columns");
    }
    const int mi = m.index_, vi = vec.index_;
    const Tensor& M = nodes_[mi].value;
    const Tensor& V = nodes_[vi].value;
    const int d = M.shape[1];
    Tensor C = M;
    for (int j = 0; j < d; ++j) C.values[static_cast<std::size_t>(row) * d + j] += V.values[j];
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, mi, vi, oi, row, d] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dM = nodes_[mi].grad;
        Tensor& dV = nodes_[vi].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) dM.values[i] += dC.values[i];
        for (int j = 0; j < d; ++j) dV.values[j] += dC.values[static_cast<std::size_t>(row) * d + j];
    };
    return out;
}

Value Tape::elementwise_mul(Value a, Value b) {
    require(value(a).same_shape(value(b)), "elementwise_mul shapes disagree");
    const int ai = a.index_, bi = b.index_;
    Tensor C = nodes_[ai].value;
    const Tensor& B = nodes_[bi].value;
    for (std::size_t i = 0; i < C.values.size(); ++i) C.values[i] *= B.values[i];
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, bi, oi] {
        const Tensor& dC = nodes_[oi].grad;
        const Tensor& A = nodes_[ai].value;
        const Tensor& B = nodes_[bi].value;
        Tensor& dA = nodes_[ai].grad;
        Tensor& dB = nodes_[bi].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) {
            dA.values[i] += dC.values[i] * B.values[i];
            dB.values[i] += dC.values[i] * A.values[i];
        }
    };
    return out;
}

Value Tape::scale(Value a, double c) {
    const int ai = a.index_;
    Tensor C = nodes_[ai].value;
    for (double& v : C.values) v *= c;
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi, c] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dA = nodes_[ai].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) dA.values[i] += c * dC.values[i];
    };
    return out;
}

Value Tape::relu(Value a) {
    const int ai = a.index_;
    Tensor C = nodes_[ai].value;
    for (double& v : C.values) v = v > 0.0 ? v : 0.0;
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi] {
        const Tensor& dC = nodes_[oi].grad;
        const Tensor& A = nodes_[ai].value;
        Tensor& dA = nodes_[ai].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) {
            if (A.values[i] > 0.0) dA.values[i] += dC.values[i];
        }
    };
    return out;
}

Value Tape::sigmoid(Value a) {
    const int ai = a.index_;
    Tensor C = nodes_[ai].value;
    for (double& v : C.values) v = sigmoid_scalar(v);
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi] {
        const Tensor& dC = nodes_[oi].grad;
        const Tensor& Y = nodes_[oi].value;
        Tensor& dA = nodes_[ai].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) {
            dA.values[i] += dC.values[i] * Y.values[i] * (1.0 - Y.values[i]);
        }
    };
    return out;
}

Value Tape::slice_cols(Value a, int start, int count) {
    {
        const Tensor& A = value(a);
        require(A.shape.size() == 2, "slice_cols needs a rank-2 operand");
        require(start >= 0 && count > 0 && start + count <= A.shape[1],
                "slice_cols range out of bounds");
    }
    const int ai = a.index_;
    const Tensor& A = nodes_[ai].value;
    const int n = A.shape[0], d = A.shape[1];
    Tensor C = Tensor::zeros({n, count});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < count; ++j) {
            C.values[static_cast<std::size_t>(i) * count + j] =
                A.values[static_cast<std::size_t>(i) * d + start + j];
        }
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi, n, d, start, count] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dA = nodes_[ai].grad;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < count; ++j) {
                dA.values[static_cast<std::size_t>(i) * d + start + j] +=
                    dC.values[static_cast<std::size_t>(i) * count + j];
            }
        }
    };
    return out;
}

Value Tape::concat_cols(std::span<const Value> parts) {
    require(!parts.empty(), "concat_cols needs at least one part");
    const int n = value(parts[0]).shape.empty() ? 0 : value(parts[0]).shape[0];
    int total = 0;
    std::vector<int> indices;
    std::vector<int> widths;
    for (Value p : parts) {
        const Tensor& t = value(p);
        require(t.shape.size() == 2 && t.shape[0] == n, "concat_cols parts must share row count");
        indices.push_back(p.index_);
        widths.push_back(t.shape[1]);
        total += t.shape[1];
    }
    Tensor C = Tensor::zeros({n, total});
    int offset = 0;
    for (std::size_t pi = 0; pi < indices.size(); ++pi) {
        const Tensor& t = nodes_[indices[pi]].value;
        const int w = widths[pi];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < w; ++j) {
                C.values[static_cast<std::size_t>(i) * total + offset + j] =
                    t.values[static_cast<std::size_t>(i) * w + j];
            }
        }
        offset += w;
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, indices, widths, oi, n, total] {
        const Tensor& dC = nodes_[oi].grad;
        int offset = 0;
        for (std::size_t pi = 0; pi < indices.size(); ++pi) {
            Tensor& dP = nodes_[indices[pi]].grad;
            const int w = widths[pi];
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < w; ++j) {
                    dP.values[static_cast<std::size_t>(i) * w + j] +=
                        dC.values[static_cast<std::size_t>(i) * total + offset + j];
                }
            }
            offset += w;
        }
    };
    return out;
}

Value Tape::gather_rows(Value table, std::vector<int> ids) {
    {
        const Tensor& T = value(table);
        require(T.shape.size() == 2, "gather_rows table must be rank 2");
        for (int id : ids) {
            if (id < 0 || id >= T.shape[0]) throw IndexOutOfRange("gather_rows id out of range");
        }
    }
    const int ti = table.index_;
    const Tensor& T = nodes_[ti].value;
    const int d = T.shape[1];
    const int n = static_cast<int>(ids.size());
    Tensor C = Tensor::zeros({n, d});
    for (int i = 0; i < n; ++i) {
        const double* src = T.values.data() + static_cast<std::size_t>(ids[i]) * d;
        std::copy(src, src + d, C.values.data() + static_cast<std::size_t>(i) * d);
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ti, oi, ids = std::move(ids), d] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dT = nodes_[ti].grad;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const double* src = dC.values.data() + i * d;
            double* dst = dT.values.data() + static_cast<std::size_t>(ids[i]) * d;
            for (int j = 0; j < d; ++j) dst[j] += src[j];
        }
    };
    return out;
}

Value Tape::layer_norm(Value x, Value gamma, double epsilon) {
    {
        const Tensor& X = value(x);
        const Tensor& G = value(gamma);
        require(X.shape.size() == 2, "layer_norm input must be rank 2");
        require(static_cast<int>(G.values.size()) == X.shape[1],
                "layer_norm scale length must equal columns");
    }
    const int xi = x.index_, gi = gamma.index_;
    const Tensor& X = nodes_[xi].value;
    const Tensor& G = nodes_[gi].value;
    const int n = X.shape[0], d = X.shape[1];
    Tensor Y = Tensor::zeros({n, d});
    std::vector<double> xhat(static_cast<std::size_t>(n) * d);
    std::vector<double> inv_std(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* row = X.values.data() + static_cast<std::size_t>(i) * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + epsilon);
        inv_std[static_cast<std::size_t>(i)] = inv;
        for (int j = 0; j < d; ++j) {
            const double xh = (row[j] - mean) * inv;
            xhat[static_cast<std::size_t>(i) * d + j] = xh;
            Y.values[static_cast<std::size_t>(i) * d + j] = xh * G.values[j];
        }
    }
    Value out = push(std::move(Y));
    const int oi = out.index_;
    nodes_[oi].back = [this, xi, gi, oi, n, d, xhat = std::move(xhat),
                       inv_std = std::move(inv_std)] {
        const Tensor& dY = nodes_[oi].grad;
        const Tensor& G = nodes_[gi].value;
        Tensor& dX = nodes_[xi].grad;
        Tensor& dG = nodes_[gi].grad;
        for (int i = 0; i < n; ++i) {
            const double* dyr = dY.values.data() + static_cast<std::size_t>(i) * d;
            const double* xhr = xhat.data() + static_cast<std::size_t>(i) * d;
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (int j = 0; j < d; ++j) {
                const double dxh = dyr[j] * G.values[j];
                mean_dxh += dxh;
                mean_dxh_xh += dxh * xhr[j];
                dG.values[j] += dyr[j] * xhr[j];
            }
            mean_dxh /= d;
            mean_dxh_xh /= d;
            const double inv = inv_std[static_cast<std::size_t>(i)];
            double* dxr = dX.values.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
                const double dxh = dyr[j] * G.values[j];
                dxr[j] += inv * (dxh - mean_dxh - xhr[j] * mean_dxh_xh);
            }
        }
    };
    return out;
}

Value Tape::mask_fill(Value scores, const AttentionMask& mask) {
    {
        const Tensor& S = value(scores);
        require(S.shape.size() == 2 && S.shape[0] == S.shape[1], "mask_fill needs square scores");
        require(S.shape[0] == mask.n, "mask size does not match scores");
    }
    const int si = scores.index_;
    const Tensor& S = nodes_[si].value;
    const int n = S.shape[0];
    Tensor C = S;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!mask.at(i, j)) C.values[static_cast<std::size_t>(i) * n + j] = kMaskNeg;
        }
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    std::vector<std::uint8_t> allowed = mask.allowed;
    nodes_[oi].back = [this, si, oi, allowed = std::move(allowed)] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dS = nodes_[si].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) {
            if (allowed[i]) dS.values[i] += dC.values[i];
        }
    };
    return out;
}

Value Tape::masked_softmax_rows(Value scores, const AttentionMask& mask) {
    {
        const Tensor& S = value(scores);
        require(S.shape.size() == 2 && S.shape[0] == S.shape[1],
                "masked_softmax_rows needs square scores");
        require(S.shape[0] == mask.n, "mask size does not match scores");
    }
    const int si = scores.index_;
    const Tensor& S = nodes_[si].value;
    const int n = S.shape[0];
    Tensor Y = Tensor::zeros({n, n});
    for (int i = 0; i < n; ++i) {
        const double* srow = S.values.data() + static_cast<std::size_t>(i) * n;
        double* yrow = Y.values.data() + static_cast<std::size_t>(i) * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (mask.at(i, j) && srow[j] > mx) mx = srow[j];
        }
        if (mx == -std::numeric_limits<double>::infinity()) {
            throw InvalidConfig("softmax row has no allowed entries");
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            if (mask.at(i, j)) {
                yrow[j] = std::exp(srow[j] - mx);
                denom += yrow[j];
            }
        }
        for (int j = 0; j < n; ++j) {
            yrow[j] = mask.at(i, j) ? yrow[j] / denom : 0.0;
        }
    }
    Value out = push(std::move(Y));
    const int oi = out.index_;
    nodes_[oi].back = [this, si, oi, n] {
        const Tensor& dY = nodes_[oi].grad;
        const Tensor& Y = nodes_[oi].value;
        Tensor& dS = nodes_[si].grad;
        for (int i = 0; i < n; ++i) {
            const double* dyr = dY.values.data() + static_cast<std::size_t>(i) * n;
            const double* yr = Y.values.data() + static_cast<std::size_t>(i) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += dyr[j] * yr[j];
            double* dsr = dS.values.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) dsr[j] += yr[j] * (dyr[j] - dot);
        }
    };
    return out;
}

Value Tape::gather_bias(Value bias_table, const EdgeTypeMap& types) {
    {
        const Tensor& T = value(bias_table);
        require(T.shape.size() == 1, "bias table must be rank 1");
        for (int v : types.type_of) {
            if (v >= 0 && v >= static_cast<int>(T.values.size()) - 1) {
                throw IndexOutOfRange("edge type exceeds bias table");
            }
        }
    }
    const int ti = bias_table.index_;
    const Tensor& T = nodes_[ti].value;
    const int self_slot = static_cast<int>(T.values.size()) - 1;
    const int n = types.n;
    Tensor C = Tensor::zeros({n, n});
    for (std::size_t idx = 0; idx < C.values.size(); ++idx) {
        const int t = types.type_of[idx];
        if (t == EdgeTypeMap::kNone) continue;  // bias 0 off-mask
        C.values[idx] = t == EdgeTypeMap::kSelf ? T.values[self_slot] : T.values[t];
    }
    Value out = push(std::move(C));
    const int oi = out.index_;
    std::vector<int> type_of = types.type_of;
    nodes_[oi].back = [this, ti, oi, type_of = std::move(type_of), self_slot] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dT = nodes_[ti].grad;
        for (std::size_t idx = 0; idx < dC.values.size(); ++idx) {
            const int t = type_of[idx];
            if (t == EdgeTypeMap::kNone) continue;
            dT.values[t == EdgeTypeMap::kSelf ? self_slot : t] += dC.values[idx];
        }
    };
    return out;
}

Value Tape::dropout(Value a, double p, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidConfig("dropout probability must be in [0,1)");
    const int ai = a.index_;
    const Tensor& A = nodes_[ai].value;
    std::vector<double> keep(A.values.size());
    const double inv_keep = 1.0 / (1.0 - p);
    for (double& k : keep) k = rng.uniform() < p ? 0.0 : inv_keep;
    Tensor C = A;
    for (std::size_t i = 0; i < C.values.size(); ++i) C.values[i] *= keep[i];
    Value out = push(std::move(C));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi, keep = std::move(keep)] {
        const Tensor& dC = nodes_[oi].grad;
        Tensor& dA = nodes_[ai].grad;
        for (std::size_t i = 0; i < dC.values.size(); ++i) dA.values[i] += dC.values[i] * keep[i];
    };
    return out;
}

Value Tape::sum(Value a) {
    const int ai = a.index_;
    double acc = 0.0;
    for (double v : nodes_[ai].value.values) acc += v;
    Value out = push(Tensor::scalar(acc));
    const int oi = out.index_;
    nodes_[oi].back = [this, ai, oi] {
        const double g = nodes_[oi].grad.values[0];
        Tensor& dA = nodes_[ai].grad;
        for (double& v : dA.values) v += g;
    };
    return out;
}

Value Tape::binary_cross_entropy_with_logits(Value logits, std::vector<double> targets) {
    {
        const Tensor& Z = value(logits);
        require(Z.values.size() == targets.size(), "target count must match logits");
        require(!targets.empty(), "binary_cross_entropy_with_logits needs at least one logit");
    }
    const int zi = logits.index_;
    const Tensor& Z = nodes_[zi].value;
    const std::size_t n = targets.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = Z.values[i];
        // stable softplus(z) - t*z
        loss += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(n);
    Value out = push(Tensor::scalar(loss));
    const int oi = out.index_;
    nodes_[oi].back = [this, zi, oi, targets = std::move(targets)] {
        const double g = nodes_[oi].grad.values[0];
        const Tensor& Z = nodes_[zi].value;
        Tensor& dZ = nodes_[zi].grad;
        const double inv_n = 1.0 / static_cast<double>(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            dZ.values[i] += g * inv_n * (sigmoid_scalar(Z.values[i]) - targets[i]);
        }
    };
    return out;
}

void Tape::backward(Value loss) {
    if (replayed_) throw TapeReplayed("backward already ran on this tape");
    Node& ln = node(loss);
    require(ln.value.size() == 1, "backward needs a scalar loss");
    for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
    ln.grad.values[0] = 1.0;
    for (std::size_t i = nodes_.size(); i > 0; --i) {
        if (nodes_[i - 1].back) nodes_[i - 1].back();
    }
    for (Node& n : nodes_) {
        if (n.parameter != nullptr) {
            for (std::size_t i = 0; i < n.grad.values.size(); ++i) {
                n.parameter->gradient.values[i] += n.grad.values[i];
            }
        }
    }
    replayed_ = true;
}

double finite_diff_check(const std::function<double()>& f, Parameter& p, const Tensor& analytic,
                         double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
    if (!analytic.same_shape(p.tensor)) {
        throw ShapeMismatch("analytic gradient shape must match parameter");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < p.tensor.values.size(); ++i) {
        const double saved = p.tensor.values[i];
        p.tensor.values[i] = saved + epsilon;
        const double up = f();
        p.tensor.values[i] = saved - epsilon;
        const double down = f();
        p.tensor.values[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NonFinite("finite_diff_check: function produced a non-finite value");
        }
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = analytic.values[i];
        const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace rasa
