#include "stkd/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stkd {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape");
        n *= d;
    }
    return n;
}

void require_2d(const Tensor& t, const char* what) {
    if (t.rank() != 2)
        throw std::invalid_argument(std::string(what) + ": expected a 2-D tensor, got rank " +
                                    std::to_string(t.rank()));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_product(shape) != data.size())
        throw std::invalid_argument("Tensor: shape does not match data length");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n = shape_product(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    if (r == 0) throw std::invalid_argument("Tensor::matrix: no rows");
    const std::size_t c = rows.begin()->size();
    Tensor t = zeros({r, c});
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("Tensor::matrix: ragged rows");
        for (double v : row) t.data[i++] = v;
    }
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    require_2d(*this, "Tensor::rows");
    return shape[0];
}

std::size_t Tensor::cols() const {
    require_2d(*this, "Tensor::cols");
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    require_2d(*this, "Tensor::at");
    return data[r * shape[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    require_2d(*this, "Tensor::at");
    return data[r * shape[1] + c];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.data[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += av * b.data[p * n + j];
        }
    return out;
}

Tensor matmul_transpose_a(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_transpose_a");
    require_2d(b, "matmul_transpose_a");
    if (a.rows() != b.rows())
        throw std::invalid_argument("matmul_transpose_a: leading dimensions differ");
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a.data[p * m + i];
            for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += av * b.data[p * n + j];
        }
    return out;
}

Tensor matmul_transpose_b(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_transpose_b");
    require_2d(b, "matmul_transpose_b");
    if (a.cols() != b.cols())
        throw std::invalid_argument("matmul_transpose_b: trailing dimensions differ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a.data[i * k + p] * b.data[j * k + p];
            out.data[i * n + j] = acc;
        }
    return out;
}

Tensor softmax(const Tensor& logits) {
    require_2d(logits, "softmax");
    if (!logits.all_finite()) throw std::invalid_argument("softmax: non-finite logits");
    const std::size_t b = logits.rows(), c = logits.cols();
    Tensor out = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        double mx = logits.data[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.data[i * c + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double e = std::exp(logits.data[i * c + j] - mx);
            out.data[i * c + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] /= sum;
    }
    return out;
}

Tensor log_softmax(const Tensor& logits) {
    require_2d(logits, "log_softmax");
    if (!logits.all_finite()) throw std::invalid_argument("log_softmax: non-finite logits");
    const std::size_t b = logits.rows(), c = logits.cols();
    Tensor out = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        double mx = logits.data[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.data[i * c + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(logits.data[i * c + j] - mx);
        const double log_sum = std::log(sum);
        for (std::size_t j = 0; j < c; ++j)
            out.data[i * c + j] = logits.data[i * c + j] - mx - log_sum;
    }
    return out;
}

}  // namespace stkd
