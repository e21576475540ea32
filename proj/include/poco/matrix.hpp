#ifndef POCO_MATRIX_HPP
#define POCO_MATRIX_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace poco {

/// Dense row-major matrix, 64-bit throughout.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    void fill(double v) { data_.assign(data_.size(), v); }
    bool all_finite() const;
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Matrix& operator+=(const Matrix& o);
    Matrix& operator*=(double s);

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// y = x * W^T (+ b broadcast over rows). x: BxI, W: OxI, b: Ox1.
Matrix linear_forward(const Matrix& x, const Matrix& W, const Matrix* b = nullptr);
/// Gradients of a linear layer; any output pointer may be null to skip it.
void linear_backward(const Matrix& x, const Matrix& W, const Matrix& dy, Matrix* dx,
                     Matrix* dW, Matrix* db);

Matrix relu_forward(const Matrix& x);
/// Subgradient at 0 is 0: mask taken from the pre-activation input.
Matrix relu_backward(const Matrix& x, const Matrix& dy);

/// Row-wise softmax, max-shifted.
Matrix softmax_rows(const Matrix& x);
Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy);

/// Mean of -log softmax(logits)[label] over rows. logits: Bx2, labels in {0,1}.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);
Matrix cross_entropy_backward(const Matrix& logits, const std::vector<int>& labels);

/// Columnwise max over all rows, 1xF output; argmax rows (first on ties) out.
Matrix max_over_group(const Matrix& x, std::vector<std::size_t>* argmax = nullptr);
Matrix max_over_group_backward(const Matrix& x, const std::vector<std::size_t>& argmax,
                               const Matrix& dy);

/// Named parameters with paired gradient buffers, deterministic order.
class ParamStore {
public:
    std::size_t add(const std::string& name, Matrix value);
    std::size_t count() const { return params_.size(); }

    Matrix& value(std::size_t i) { return params_[i].value; }
    const Matrix& value(std::size_t i) const { return params_[i].value; }
    Matrix& grad(std::size_t i) { return params_[i].grad; }
    const Matrix& grad(std::size_t i) const { return params_[i].grad; }
    const std::string& name(std::size_t i) const { return params_[i].name; }

    void zero_grads();
    std::size_t scalar_count() const;

private:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
    };
    std::vector<Entry> params_;
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::vector<Matrix> m, v;  // sized lazily on first step
};

/// One Adam update with bias correction; zeroes gradients afterwards.
void adam_step(ParamStore& params, AdamState& state);

/// Central finite differences over every scalar parameter; returns the max
/// relative error against the gradients currently stored in `params`.
double finite_diff_check(const std::function<double()>& loss_fn, ParamStore& params,
                         double eps = 1e-5);

}  // namespace poco

#endif
