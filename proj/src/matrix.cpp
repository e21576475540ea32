#include "poco/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poco {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols()) throw std::invalid_argument("ragged initializer");
        std::copy(row.begin(), row.end(), m.row(r++));
    }
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (!same_shape(o)) throw std::invalid_argument("shape mismatch in +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix linear_forward(const Matrix& x, const Matrix& W, const Matrix* b) {
    if (x.cols() != W.cols())
        throw std::invalid_argument("linear: input " + shape_str(x) + " vs weight " +
                                    shape_str(W));
    if (b && (b->rows() != W.rows() || b->cols() != 1))
        throw std::invalid_argument("linear: bias " + shape_str(*b) + " vs weight " +
                                    shape_str(W));
    const std::size_t B = x.rows(), I = x.cols(), O = W.rows();
    Matrix y(B, O);
    for (std::size_t r = 0; r < B; ++r) {
        const double* xr = x.row(r);
        double* yr = y.row(r);
        if (b)
            for (std::size_t o = 0; o < O; ++o) yr[o] = (*b)(o, 0);
        // Accumulate over the shared inner dimension in i-k-j order so the
        // inner loop is contiguous in both W and y.
        for (std::size_t i = 0; i < I; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            for (std::size_t o = 0; o < O; ++o) yr[o] += xv * W(o, i);
        }
    }
    return y;
}

void linear_backward(const Matrix& x, const Matrix& W, const Matrix& dy, Matrix* dx,
                     Matrix* dW, Matrix* db) {
    const std::size_t B = x.rows(), I = x.cols(), O = W.rows();
    if (dy.rows() != B || dy.cols() != O)
        throw std::invalid_argument("linear backward: dy " + shape_str(dy));
    if (dx) {
        if (!dx->same_shape(x)) *dx = Matrix(B, I);
        for (std::size_t r = 0; r < B; ++r) {
            const double* dyr = dy.row(r);
            double* dxr = dx->row(r);
            std::fill(dxr, dxr + I, 0.0);
            for (std::size_t o = 0; o < O; ++o) {
                const double g = dyr[o];
                if (g == 0.0) continue;
                const double* wr = W.row(o);
                for (std::size_t i = 0; i < I; ++i) dxr[i] += g * wr[i];
            }
        }
    }
    if (dW) {
        if (!dW->same_shape(W)) *dW = Matrix(O, I);
        for (std::size_t r = 0; r < B; ++r) {
            const double* dyr = dy.row(r);
            const double* xr = x.row(r);
            for (std::size_t o = 0; o < O; ++o) {
                const double g = dyr[o];
                if (g == 0.0) continue;
                double* dwr = dW->row(o);
                for (std::size_t i = 0; i < I; ++i) dwr[i] += g * xr[i];
            }
        }
    }
    if (db) {
        if (db->rows() != O || db->cols() != 1) *db = Matrix(O, 1);
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t o = 0; o < O; ++o) (*db)(o, 0) += dy(r, o);
    }
}

Matrix relu_forward(const Matrix& x) {
    Matrix y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = std::max(0.0, y.data()[i]);
    return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x.data()[i] <= 0.0) dx.data()[i] = 0.0;
    return dx;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix y = x;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* row = y.row(r);
        const double mx = *std::max_element(row, row + y.cols());
        double sum = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < y.cols(); ++c) row[c] /= sum;
    }
    return y;
}

Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy) {
    Matrix dx(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* yr = y.row(r);
        const double* dyr = dy.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += yr[c] * dyr[c];
        for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = yr[c] * (dyr[c] - dot);
    }
    return dx;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.cols() != 2 || logits.rows() != labels.size())
        throw std::invalid_argument("cross_entropy: logits must be Bx2 with B labels");
    double loss = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int label = labels[r];
        if (label != 0 && label != 1)
            throw std::invalid_argument("cross_entropy: label must be 0 or 1");
        const double a = logits(r, 0), b = logits(r, 1);
        const double mx = std::max(a, b);
        const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
        loss += lse - logits(r, static_cast<std::size_t>(label));
    }
    return loss / static_cast<double>(logits.rows());
}

Matrix cross_entropy_backward(const Matrix& logits, const std::vector<int>& labels) {
    Matrix d = softmax_rows(logits);
    const double inv_b = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) {
        d(r, static_cast<std::size_t>(labels[r])) -= 1.0;
        d(r, 0) *= inv_b;
        d(r, 1) *= inv_b;
    }
    return d;
}

Matrix max_over_group(const Matrix& x, std::vector<std::size_t>* argmax) {
    if (x.rows() == 0) throw std::invalid_argument("max_over_group: empty input");
    Matrix y(1, x.cols());
    if (argmax) argmax->assign(x.cols(), 0);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double best = x(0, c);
        std::size_t best_r = 0;
        for (std::size_t r = 1; r < x.rows(); ++r) {
            if (x(r, c) > best) {
                best = x(r, c);
                best_r = r;
            }
        }
        y(0, c) = best;
        if (argmax) (*argmax)[c] = best_r;
    }
    return y;
}

Matrix max_over_group_backward(const Matrix& x, const std::vector<std::size_t>& argmax,
                               const Matrix& dy) {
    Matrix dx(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) dx(argmax[c], c) = dy(0, c);
    return dx;
}

std::size_t ParamStore::add(const std::string& name, Matrix value) {
    Entry e;
    e.name = name;
    e.grad = Matrix(value.rows(), value.cols());
    e.value = std::move(value);
    params_.push_back(std::move(e));
    return params_.size() - 1;
}

void ParamStore::zero_grads() {
    for (Entry& e : params_) e.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const Entry& e : params_) n += e.value.size();
    return n;
}

void adam_step(ParamStore& params, AdamState& state) {
    if (state.m.empty()) {
        for (std::size_t i = 0; i < params.count(); ++i) {
            state.m.emplace_back(params.value(i).rows(), params.value(i).cols());
            state.v.emplace_back(params.value(i).rows(), params.value(i).cols());
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.count(); ++i) {
        Matrix& w = params.value(i);
        Matrix& g = params.grad(i);
        if (!g.all_finite())
            throw std::runtime_error("non-finite gradient for parameter " + params.name(i));
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g.data()[j];
            m.data()[j] = state.beta1 * m.data()[j] + (1.0 - state.beta1) * gj;
            v.data()[j] = state.beta2 * v.data()[j] + (1.0 - state.beta2) * gj * gj;
            const double mhat = m.data()[j] / bc1;
            const double vhat = v.data()[j] / bc2;
            w.data()[j] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
        g.fill(0.0);
    }
}

double finite_diff_check(const std::function<double()>& loss_fn, ParamStore& params,
                         double eps) {
    double max_err = 0.0;
    for (std::size_t i = 0; i < params.count(); ++i) {
        Matrix& w = params.value(i);
        const Matrix& g = params.grad(i);
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double saved = w.data()[j];
            w.data()[j] = saved + eps;
            const double hi = loss_fn();
            w.data()[j] = saved - eps;
            const double lo = loss_fn();
            w.data()[j] = saved;
            const double fd = (hi - lo) / (2.0 * eps);
            const double an = g.data()[j];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
            max_err = std::max(max_err, std::abs(fd - an) / denom);
        }
    }
    return max_err;
}

}  // namespace poco
